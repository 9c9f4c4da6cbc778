import filecmp
import json
import subprocess
import sys

import numpy as np
import pytest

from cellsnake import config
from cellsnake.cli import build_parser, main
from cellsnake.errors import ConfigError
from cellsnake.fileio import read_label_map, save_pgm
from cellsnake.image import GrayImage

SCENE = {"width": 64, "height": 64, "background": 0.2, "noise_sigma": 0.02, "seed": 4, "frames": 10,
         "cells": [{"center": [16, 20], "velocity": [1, 0], "radius": 7, "contrast": 0.5},
                   {"center": [44, 44], "velocity": [0, -1], "radius": 8, "contrast": 0.5}]}
BRIGHT = ["--set", "segmenter.polarity=bright"]


@pytest.fixture
def scene_file(tmp_path):
    p = tmp_path / "scene.json"
    p.write_text(json.dumps(SCENE))
    return p


def dir_files(d):
    return sorted(p.relative_to(d) for p in d.rglob("*") if p.is_file())


def test_config_defaults_and_overrides(tmp_path):
    flat = config.resolve(None, ["snake.alpha=0.25", "segmenter.polarity=bright", "alignment.L=3"])
    cfg = config.pipeline_config(flat)
    assert cfg.snake.alpha == 0.25 and cfg.segmenter.polarity == "bright" and cfg.alignment.L == 3
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"energy.sigma": 3, "snake.max_iterations": 50}))
    cfg = config.pipeline_config(config.resolve(p, ["energy.sigma=1.5"]))
    assert cfg.sigma == 1.5 and cfg.snake.max_iterations == 50


@pytest.mark.parametrize("items", [["snake.nope=1"], ["alignment.L=2.5"], ["snake.alpha=abc"],
                                   ["noequals"], ["segmenter.morph_radius=true"]])
def test_config_rejects_bad_overrides(items):
    with pytest.raises(ConfigError):
        config.pipeline_config(config.resolve(None, items))


def test_config_rejects_invalid_values_and_files(tmp_path):
    with pytest.raises(ConfigError):
        config.pipeline_config(config.resolve(None, ["snake.gamma=0"]))
    p = tmp_path / "c.json"
    p.write_text('{"snake": {"alpha": 1}}')
    with pytest.raises(ConfigError):
        config.resolve(p)
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        config.resolve(p)
    with pytest.raises(ConfigError):
        config.resolve(tmp_path / "missing.json")


@pytest.mark.parametrize("cmd", ["segment", "track", "synth", "compare"])
def test_help_documents_common_flags(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        main([cmd, "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--config", "--out", "--overlay", "--seed", "--set"):
        assert flag in out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "cellsnake", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "segment" in r.stdout


def test_segment_writes_outputs(tmp_path):
    a = np.full((32, 32), 0.2)
    a[8:20, 8:20] = 0.8
    save_pgm(GrayImage(a), tmp_path / "in.pgm")
    assert main(["segment", str(tmp_path / "in.pgm"), "--out", str(tmp_path / "o")] + BRIGHT) == 0
    lab = read_label_map(tmp_path / "o" / "labels_0000.pgm")
    # opening with the radius-1 disk (a plus) trims the four corners
    assert (lab == 1).sum() == 140
    rows = (tmp_path / "o" / "segments.csv").read_text().splitlines()
    assert len(rows) == 2 and rows[1].startswith("0,1,140,")


def test_segment_errors(tmp_path, capsys):
    save_pgm(GrayImage(np.full((8, 8), 0.5)), tmp_path / "flat.pgm")
    assert main(["segment", str(tmp_path / "flat.pgm"), "--out", str(tmp_path)]) == 2
    assert "single intensity" in capsys.readouterr().err
    assert main(["segment", str(tmp_path / "missing.pgm")]) == 2
    assert main(["segment", str(tmp_path / "flat.pgm"), "--set", "bogus.key=1"]) == 3
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["segment", str(tmp_path / "flat.pgm"), "--config", str(bad)]) == 3


def test_synth_outputs_and_determinism(tmp_path, scene_file):
    assert main(["synth", str(scene_file), "--out", str(tmp_path / "a")]) == 0
    assert main(["synth", str(scene_file), "--out", str(tmp_path / "b")]) == 0
    files = dir_files(tmp_path / "a")
    assert len([f for f in files if f.parent.name == "" and f.suffix == ".pgm"]) == 10
    assert len([f for f in files if f.parent.name == "truth" and f.suffix == ".pgm"]) == 10
    assert files == dir_files(tmp_path / "b")
    for f in files:
        assert filecmp.cmp(tmp_path / "a" / f, tmp_path / "b" / f, shallow=False)
    assert main(["synth", str(scene_file), "--seed", "99", "--out", str(tmp_path / "c")]) == 0
    assert json.loads((tmp_path / "c" / "scene.json").read_text())["seed"] == 99


def test_synth_five_frames(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({**SCENE, "frames": 5}))
    assert main(["synth", str(p), "--out", str(tmp_path / "o")]) == 0
    assert len(list((tmp_path / "o").glob("frame_*.pgm"))) == 5
    assert len(list((tmp_path / "o" / "truth").glob("labels_*.pgm"))) == 5


def test_synth_invalid_scene(tmp_path, capsys):
    bad = {**SCENE, "cells": [{"center": [2, 2], "radius": 6, "contrast": 0.3}]}
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(bad))
    assert main(["synth", str(p), "--out", str(tmp_path / "o")]) == 3
    assert "cell 1 frame 0" in capsys.readouterr().err


def test_track_on_synth_output(tmp_path, scene_file):
    main(["synth", str(scene_file), "--out", str(tmp_path / "syn")])
    assert main(["track", str(tmp_path / "syn"), "--out", str(tmp_path / "tr")] + BRIGHT) == 0
    tracks = json.loads((tmp_path / "tr" / "tracks.json").read_text())["tracks"]
    assert len(tracks) == 2 and all(len(t["entries"]) == 10 for t in tracks)
    assert not list((tmp_path / "tr").rglob("*.png"))
    mob = (tmp_path / "tr" / "mobility.csv").read_text().splitlines()
    assert mob[0] == "track,mean_speed,net_disp,path_len,confinement" and len(mob) == 3
    assert len(list((tmp_path / "tr" / "labels").glob("frame_*.pgm"))) == 10
    contours = json.loads((tmp_path / "tr" / "contours.json").read_text())["frames"]
    assert [len(f["contours"]) for f in contours] == [2] * 10


def test_track_overlay(tmp_path, scene_file):
    main(["synth", str(scene_file), "--out", str(tmp_path / "syn")])
    assert main(["track", str(tmp_path / "syn"), "--overlay", "--out", str(tmp_path / "tr")] + BRIGHT) == 0
    pngs = sorted((tmp_path / "tr" / "overlays").glob("*.png"))
    assert len(pngs) == 10
    from PIL import Image
    im = np.asarray(Image.open(pngs[0]))
    assert im.shape == (64, 64, 3) and np.any(im[..., 0] != im[..., 1])


def test_track_empty_dir(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["track", str(tmp_path / "empty")]) == 2


def test_compare(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"width": 64, "height": 64, "background": 0.2, "noise_sigma": 0.0, "frames": 1,
                             "cells": [{"center": [32, 32], "radius": 20, "contrast": 0.6}]}))
    main(["synth", str(p), "--out", str(tmp_path / "syn")])
    rc = main(["compare", str(tmp_path / "syn"), str(tmp_path / "syn" / "truth"), "--out", str(tmp_path / "c"),
               "--set", "energy.sigma=3"] + BRIGHT)
    assert rc == 0
    rows = (tmp_path / "c" / "compare.csv").read_text().splitlines()
    assert rows[0] == "frame,method,jaccard"
    scores = {r.split(",")[1]: float(r.split(",")[2]) for r in rows[1:]}
    assert set(scores) == {"plain", "hybrid"}
    assert scores["hybrid"] >= 0.9
    (tmp_path / "empty").mkdir()
    assert main(["compare", str(tmp_path / "syn"), str(tmp_path / "empty")]) == 2


def test_compare_frame_count_mismatch(tmp_path, scene_file):
    main(["synth", str(scene_file), "--out", str(tmp_path / "syn")])
    (tmp_path / "syn" / "truth" / "labels_0009.pgm").unlink()
    assert main(["compare", str(tmp_path / "syn"), str(tmp_path / "syn" / "truth")] + BRIGHT) == 2


def test_parser_rejects_bad_seed():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["synth", "x.json", "--seed", "-1"])
