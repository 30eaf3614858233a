import numpy as np
import pytest

from klcluster import io
from klcluster.clusters import WindowSet, pooled_distribution
from klcluster.entropy import kl_cluster_entropy, shannon_cluster_entropy
from klcluster.errors import DomainError, ParseError
from klcluster.fbm import FbmSpec, generate_ensemble, generate_fbm
from klcluster.portfolio import PricePanel, profit_report, simulate_active
from klcluster.series import RegularSeries
from klcluster.weights import DiversityIndex, WeightVector, kl_weights


@pytest.fixture(scope="module")
def dists():
    windows = WindowSet((10, 20, 40))
    P = pooled_distribution([generate_fbm(FbmSpec(0.6, 20000, 1))], windows)
    Q = pooled_distribution(generate_ensemble(FbmSpec(0.5, 20000, 100, 5)), windows)
    return P, Q


def test_series_round_trip(tmp_path):
    s = generate_fbm(FbmSpec(0.3, 500, 2))
    io.write_series(tmp_path / "s.csv", s)
    assert io.read_series(tmp_path / "s.csv") == s
    t = RegularSeries(np.random.default_rng(0).normal(size=20), step_seconds=5.0, origin_timestamp=1_500_000_000)
    io.write_series(tmp_path / "t.csv", t, index_column="timestamp")
    assert io.read_series(tmp_path / "t.csv") == t


def test_distribution_round_trip(tmp_path, dists):
    P, _ = dists
    io.write_distribution(tmp_path / "d.csv", P)
    back = io.read_distribution(tmp_path / "d.csv")
    assert back.counts == P.counts and back.entries == P.entries
    per = P.renormalized("per-window")
    io.write_distribution(tmp_path / "p.csv", per)
    back = io.read_distribution(tmp_path / "p.csv")
    assert back.normalization == "per-window" and back.entries == per.entries


def test_profile_round_trip(tmp_path, dists):
    P, Q = dists
    for prof in (kl_cluster_entropy(P, Q, 0.05), shannon_cluster_entropy(P)):
        io.write_profile(tmp_path / "p.csv", prof)
        back = io.read_profile(tmp_path / "p.csv", prof.kind)
        assert back.components == prof.components
        assert back.aggregate == prof.aggregate
    assert (tmp_path / "p.csv").read_text().splitlines()[-1].startswith("aggregate,")


def test_indices_and_weights_round_trip(tmp_path):
    ix = [DiversityIndex("kl", v, asset_id=a) for a, v in zip("ABC", (0.123456789012345678, 0.5, 2.0))]
    io.write_indices(tmp_path / "i.csv", ix)
    back = io.read_indices(tmp_path / "i.csv", "kl")
    assert [b.value for b in back] == [i.value for i in ix]
    w = kl_weights(back)
    io.write_weights(tmp_path / "w.csv", w)
    wb = io.read_weights(tmp_path / "w.csv", scheme="kl")
    for a in w.assets:
        assert float(f"{w[a]:.10g}") == wb[a]
    io.write_weights(tmp_path / "w2.csv", wb)
    assert (tmp_path / "w2.csv").read_text() == (tmp_path / "w.csv").read_text()


def test_panel_and_trajectory_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    panel = PricePanel(("x", "y"), rng.uniform(10, 20, (2, 12)))
    io.write_panel(tmp_path / "panel.csv", panel)
    back = io.read_panel(tmp_path / "panel.csv")
    assert back.assets == panel.assets and np.array_equal(back.prices, panel.prices)
    wbm = [WeightVector.from_array(("x", "y"), [a, 1 - a], "kl") for a in rng.uniform(0, 1, 12)]
    io.write_weights_by_month(tmp_path / "wbm.csv", wbm)
    wbm_back = io.read_weights_by_month(tmp_path / "wbm.csv", scheme="kl", atol=1e-9)
    traj = simulate_active(wbm_back, panel, 1000.0)
    io.write_trajectory(tmp_path / "traj.csv", traj)
    tb = io.read_trajectory(tmp_path / "traj.csv", "active", "kl", 1000.0)
    assert np.array_equal(tb.wealth, traj.wealth)
    rep = profit_report(traj)
    io.write_profit(tmp_path / "profit.csv", rep)
    rb = io.read_profit(tmp_path / "profit.csv")
    assert np.array_equal(rb.monthly, rep.monthly) and rb.year == rep.year


def test_published_weights_tolerate_rounding(tmp_path):
    (tmp_path / "w.csv").write_text("asset,M1,M2\na,0.3333,0.5\nb,0.3333,0.5\nc,0.3333,0\n")
    wbm = io.read_weights_by_month(tmp_path / "w.csv")
    assert len(wbm) == 2 and wbm[0].scheme == "published"
    with pytest.raises(ParseError):
        io.read_weights_by_month(tmp_path / "w.csv", atol=1e-9)


@pytest.mark.parametrize(
    "text,err",
    [
        ("n,tau,count\n1,2,3\n", ParseError),
        ("n,tau,count,probability\n2,1,x,0.5\n", ParseError),
        ("n,tau,count,probability\n2,1,1,0.5\n2,1,1,0.5\n", ParseError),
        ("n,tau,count,probability\n2,1,1,0.7\n2,2,1,0.3\n", ParseError),
        ("n,tau,count,probability\n", DomainError),
        ("", DomainError),
    ],
)
def test_distribution_parse_errors(tmp_path, text, err):
    (tmp_path / "d.csv").write_text(text)
    with pytest.raises(err):
        io.read_distribution(tmp_path / "d.csv")


def test_parse_error_carries_line(tmp_path):
    (tmp_path / "i.csv").write_text("asset,value\na,0.5\nb,oops\n")
    with pytest.raises(ParseError) as e:
        io.read_indices(tmp_path / "i.csv", "kl")
    assert e.value.line == 3 and ":3:" in str(e.value)


def test_profile_without_aggregate(tmp_path):
    (tmp_path / "p.csv").write_text("n,tau,component\n2,1,0.5\n")
    with pytest.raises(ParseError):
        io.read_profile(tmp_path / "p.csv", "kl")


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        io.read_series(tmp_path / "nope.csv")
