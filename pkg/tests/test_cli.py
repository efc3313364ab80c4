import json

import numpy as np
import pytest

from polyseg.cli import main
from polyseg.geometry import save_prompts
from polyseg.metrics import dice
from polyseg.phantoms import sphere_phantom, spanning_polyline
from polyseg.volume import MaskVolume, load_mask, save_mask


@pytest.fixture(scope="module")
def run_inputs(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    vol, gt = sphere_phantom(shape=(48, 48, 48), radius=15.0)
    vol_path = tmp / "vol.raw"
    # store the phantom as rawjson (intensities are 0/1 already)
    vol_path.write_bytes(vol.data.astype("<f4").ravel(order="F").tobytes())
    vol_path.with_suffix(".json").write_text(
        json.dumps({"dims": [48, 48, 48], "spacing": [1, 1, 1], "origin": [0, 0, 0], "dtype": "f32"})
    )
    prompts_path = tmp / "prompts.json"
    save_prompts([spanning_polyline([23.5] * 3, (15, 15, 15))], prompts_path)
    gt_path = tmp / "gt.nii"
    save_mask(gt, gt_path)
    return tmp, vol_path, prompts_path, gt_path, gt


class TestRunCommand:
    def test_run_writes_mask_and_mesh(self, run_inputs, capsys):
        tmp, vol_path, prompts_path, gt_path, gt = run_inputs
        out = tmp / "mask.nii.gz"
        mesh = tmp / "mesh.stl"
        rc = main(
            [
                "run",
                "--volume", str(vol_path),
                "--prompts", str(prompts_path),
                "--k", "3",
                "--stride", "1",
                "--backend", "flood:128",
                "--out", str(out),
                "--mesh", str(mesh),
                "--seed", "0",
            ]
        )
        assert rc == 0
        stats = json.loads(capsys.readouterr().out)
        assert stats["tasks_failed"] == 0
        pred = load_mask(out)
        assert dice(pred, gt) >= 0.98
        assert mesh.stat().st_size > 84

    def test_run_with_postprocess_flags(self, run_inputs, tmp_path):
        _, vol_path, prompts_path, _, _ = run_inputs
        out = tmp_path / "m.nii"
        rc = main(
            [
                "run",
                "--volume", str(vol_path),
                "--prompts", str(prompts_path),
                "--out", str(out),
                "--largest-component",
                "--closing", "1",
                "--min-axes", "1",
            ]
        )
        assert rc == 0
        assert out.exists()


class TestEvalCommand:
    def test_eval_json(self, run_inputs, tmp_path, capsys):
        *_, gt_path, gt = run_inputs
        pred_path = tmp_path / "pred.nii"
        data = gt.data.copy()
        save_mask(MaskVolume(dims=gt.dims, spacing=gt.spacing, data=data), pred_path)
        rc = main(["eval", "--pred", str(pred_path), "--gt", str(gt_path)])
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["dice"] == 1.0
        assert doc["pred_stats"]["voxels"] == int(gt.data.sum())
        assert doc["gt_stats"]["components"] == 1

    def test_eval_grid_mismatch_errors(self, run_inputs, tmp_path, capsys):
        *_, gt_path, gt = run_inputs
        other = tmp_path / "other.nii"
        save_mask(
            MaskVolume(dims=(8, 8, 8), spacing=(1, 1, 1), data=np.zeros((8, 8, 8), bool)), other
        )
        rc = main(["eval", "--pred", str(other), "--gt", str(gt_path)])
        assert rc == 1


class TestExperimentCommand:
    def test_csv_output(self, run_inputs, tmp_path, capsys):
        _, vol_path, prompts_path, gt_path, _ = run_inputs
        out = tmp_path / "rows.csv"
        rc = main(
            [
                "experiment",
                "--volume", str(vol_path),
                "--prompts", str(prompts_path),
                "--gt", str(gt_path),
                "--ks", "3,4",
                "--out", str(out),
            ]
        )
        assert rc == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "k,dice,tasks,wall_time"
        assert len(lines) == 3
        ks = [int(l.split(",")[0]) for l in lines[1:]]
        assert ks == [3, 4]
