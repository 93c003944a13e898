import csv
import io
import json
import math

import numpy as np
import pytest

from nntk import DefinitenessError, InputError
from nntk.cli import main
from nntk.experiments import (
    ExperimentConfig,
    compute,
    gen_dataset,
    loglog_slope,
    render_csv,
    run_experiment,
    run_seed,
    splitmix64,
)


def read_csv(path):
    text = open(path).read()
    header, body = text.split("\n", 1)
    return header, list(csv.DictReader(io.StringIO(body)))


def test_grid_endpoints():
    data = gen_dataset("sin5pi", 16)
    assert data.xs[0, 0] == -0.9375 and data.xs[-1, 0] == 0.9375
    assert np.all(data.xs != 0)


def test_label_formula_point():
    x = 0.1
    assert 2 * x + 0.4 * np.sin(5 * np.pi * x) == pytest.approx(0.6, abs=1e-15)


@pytest.mark.parametrize("target, omega", [("sin5pi", 5), ("sin20pi", 20)])
def test_labels_match_scalar_oracle(target, omega):
    data = gen_dataset(target, 16)
    for x, y in zip(data.xs[:, 0], data.ys):
        assert y == pytest.approx(2 * x + 0.4 * math.sin(omega * math.pi * x), abs=1e-14)


def test_odd_grid_avoids_zero():
    data = gen_dataset("sin5pi", 5)
    assert np.all(data.xs != 0) and np.all(np.abs(data.xs) <= 1)


def test_dataset_errors():
    with pytest.raises(InputError):
        gen_dataset("sin3pi", 4)
    with pytest.raises(InputError):
        gen_dataset("sin5pi", 0)


def test_slope_exact_power_law():
    xs = np.array([2.0**k for k in range(8, 14)])
    slope, _, r2 = loglog_slope(xs, xs**-0.48)
    assert abs(slope + 0.48) <= 1e-12 and r2 == pytest.approx(1.0, abs=1e-12)


def test_slope_constant():
    slope, _, _ = loglog_slope([1.0, 10.0, 100.0], [3.0, 3.0, 3.0])
    assert slope == pytest.approx(0.0, abs=1e-12)


def test_slope_noisy_quadratic():
    rng = np.random.default_rng(0)
    xs = np.linspace(1, 50, 20)
    ys = 3 * xs**2 * (1 + 0.01 * rng.normal(size=20))
    slope, _, _ = loglog_slope(xs, ys)
    assert abs(slope - 2) <= 0.05


def test_slope_rejects_nonpositive():
    with pytest.raises(InputError):
        loglog_slope([1.0, 2.0], [1.0, 0.0])
    with pytest.raises(InputError):
        loglog_slope([1.0], [1.0])


def test_seed_mixing():
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert run_seed(0, 3) == splitmix64(3)
    assert run_seed(5, 3) == 5 ^ splitmix64(3)
    assert len({run_seed(0, r) for r in range(1000)}) == 1000


def test_config_validation():
    with pytest.raises(InputError):
        ExperimentConfig("bogus")
    with pytest.raises(InputError):
        ExperimentConfig("z-sweep", N_list=[])
    with pytest.raises(InputError):
        ExperimentConfig("z-sweep", seeds=0)
    with pytest.raises(InputError):
        ExperimentConfig("z-sweep", beta=0.5)


def small(experiment, **kw):
    base = dict(N_list=[64, 128], gamma_list=[1.0], seeds=2, mc_samples=2000, M=6, K=2)
    base.update(kw)
    return ExperimentConfig(experiment, **base)


def test_spectra_gamma_zero_column_is_ones(tmp_path):
    cfg = small("spectra", gamma_list=[0.0, 0.1], target="sin5pi", out=str(tmp_path / "s.csv"))
    _, rows = read_csv(run_experiment(cfg))
    assert len(rows) == 6
    for row in rows:
        assert float(row["nntk_g0"]) == 1.0
        lam = float(row["ntk"])
        assert float(row["nntk_g0.1"]) == pytest.approx(lam / (0.1 + lam), abs=1e-10)
    assert [int(r["m"]) for r in rows] == list(range(1, 7))
    lams = [float(r["ntk"]) for r in rows]
    assert lams == sorted(lams, reverse=True)


def test_one_step_rows_and_summary():
    table = compute(small("one-step", gamma_list=[1.0, 0.0]))
    cells = [r for r in table.rows if r[0] == "cell"]
    assert len(cells) == 2 * 2 * 2
    # gamma = 0 fails the guard at finite width: recorded, not raised
    assert all(r[5] == 1 for r in cells if r[2] == 0.0)
    means = table.column("rel_loss", kind="mean", gamma=1.0)
    assert len(means) == 2 and all(0 < m < 1 for m in means)


def test_z_sweep_slope_row():
    table = compute(small("z-sweep", N_list=[64, 128, 256]))
    slopes = [r for r in table.rows if r[0] == "slope"]
    assert len(slopes) == 1 and math.isfinite(slopes[0][4])


def test_kernel_sweep_rows():
    table = compute(small("kernel-sweep"))
    assert table.columns[:5] == ["kind", "N", "gamma", "seed", "distance"]
    assert all(v > 0 for v in table.column("distance", kind="cell"))


def test_train_rows():
    table = compute(small("train", N_list=[64], seeds=1, K=3))
    assert len(table.rows) == 4
    assert table.rows[-1][table.columns.index("max_update")] == ""


def test_train_aborts_on_guard():
    with pytest.raises(DefinitenessError):
        compute(small("train", gamma_list=[0.0]))


def test_limit_rows():
    cfg = small("limit", gamma_list=[0.5], K=3)
    table = compute(cfg)
    inf_rows = [r for r in table.rows if r[0] == "inf"]
    assert len(inf_rows) == 4
    res = table.columns.index("limit_residual")
    env = table.columns.index("envelope")
    assert all(r[res] <= r[env] + 1e-9 for r in inf_rows)
    finite = [r for r in table.rows if r[0] != "inf"]
    assert len(finite) == 2 * 2 * 4


@pytest.mark.parametrize("experiment", ["spectra", "one-step", "z-sweep", "kernel-sweep", "train", "limit"])
def test_csv_byte_identical(tmp_path, experiment):
    a = run_experiment(small(experiment, out=str(tmp_path / "a.csv")))
    b = run_experiment(small(experiment, out=str(tmp_path / "b.csv")))
    assert a.read_bytes() == b.read_bytes()


def test_csv_header_and_float_format():
    cfg = small("z-sweep")
    text = render_csv(cfg, compute(cfg))
    first = text.splitlines()[0]
    assert first.startswith("# nntk ")
    prov = json.loads(first.split(" ", 3)[3])
    assert prov["experiment"] == "z-sweep" and prov["seeds"] == 2
    row = text.splitlines()[2].split(",")
    assert float(row[4]) == compute(cfg).rows[0][4]


def test_cli_success(tmp_path):
    out = tmp_path / "z.csv"
    code = main(["--experiment", "z-sweep", "--n-list", "2^6,2^7", "--gamma-list", "1",
                 "--seeds", "2", "--m", "6", "--out", str(out)])
    assert code == 0
    header, rows = read_csv(out)
    assert header.startswith("#") and rows


def test_cli_input_error(tmp_path, capsys):
    assert main(["--experiment", "z-sweep", "--beta", "0.4", "--out", str(tmp_path / "x.csv")]) == 2
    with pytest.raises(SystemExit) as info:
        main(["--experiment", "nope"])
    assert info.value.code == 2


def test_cli_guard_abort(tmp_path):
    code = main(["--experiment", "train", "--n-list", "8", "--gamma-list", "0", "--seeds", "1",
                 "--m", "6", "--out", str(tmp_path / "t.csv")])
    assert code == 3
