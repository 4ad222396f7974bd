import json
import math
import random
from fractions import Fraction

import pytest

import raymoments.diffops as diffops
import raymoments.moments as moments
import raymoments.verify as verify
from raymoments import (
    PolyGauss,
    Polynomial,
    SuiteConfig,
    generalized_saint_venant,
    generate_potential,
    inner_derivative,
    main,
    moment_stack,
    operator_report,
    parse_field,
    random_field,
    random_ts_point,
    run_suites,
    serialize_field,
    suite_identities,
    suite_kernel,
    sym_field,
)


class TestGeneratePotential:
    def test_gradient_case(self):
        v, f = generate_potential(2, 1, 0, 2, seed=1)
        assert v.rank == 0 and f.rank == 1
        assert f == inner_derivative(v)

    def test_kernel_membership(self):
        _, f = generate_potential(2, 2, 1, 2, seed=2)
        assert operator_report(generalized_saint_venant(f, 1)).is_zero
        rng = random.Random(3)
        for _ in range(20):
            pt = random_ts_point(2, rng)
            assert all(v.is_zero for v in moment_stack(f, 1, pt))

    def test_rank_too_small(self):
        with pytest.raises(ValueError):
            generate_potential(2, 1, 1, 2, seed=4)


class TestSuites:
    def test_kernel_default_passes(self):
        result = suite_kernel(SuiteConfig(n=2, m=2, k=1, seed=7, samples=10))
        assert result.passed
        ids = {rec.check_id for rec in result.records}
        assert "potential-exact-kernel" in ids
        assert "separation-moment-witness" in ids

    def test_kernel_vector_case(self):
        result = suite_kernel(SuiteConfig(n=3, m=1, k=0, seed=5, samples=10))
        assert result.passed

    def test_kernel_degenerate_top_order(self):
        result = suite_kernel(SuiteConfig(n=2, m=2, k=2, seed=6, samples=8))
        assert result.passed
        ids = {rec.check_id for rec in result.records}
        assert "degenerate-top-order" in ids
        assert "potential-exact-kernel" not in ids

    def test_identities_default_passes(self):
        result = suite_identities(SuiteConfig(n=2, m=2, k=1, seed=7, samples=6))
        assert result.passed
        assert all(rec.residual == 0.0 for rec in result.records)

    def test_catalog_coverage(self):
        results = run_suites(SuiteConfig(n=2, m=2, k=1, seed=7, samples=4), "all")
        results += run_suites(SuiteConfig(n=2, m=2, k=2, seed=7, samples=4),
                              "kernel")
        import re
        seen = set()
        for result in results:
            for rec in result.records:
                seen.add(re.sub(r"-s\d+$", "", rec.check_id))
        wanted = set(verify.IDENTITY_CATALOG) | set(verify.KERNEL_CATALOG)
        assert wanted <= seen

    def test_every_record_carries_identity_description(self):
        results = run_suites(SuiteConfig(n=2, m=1, k=0, seed=9, samples=3), "all")
        catalog = {**verify.IDENTITY_CATALOG, **verify.KERNEL_CATALOG}
        for result in results:
            for rec in result.records:
                assert rec.identity in catalog.values()

    def test_determinism_bit_identical_reports(self):
        config = SuiteConfig(n=2, m=2, k=1, seed=13, samples=5, fmt="json")
        one = verify.render_report(run_suites(config, "all"), config, "json")
        two = verify.render_report(run_suites(config, "all"), config, "json")
        assert one == two

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SuiteConfig(n=1).validate()
        with pytest.raises(ValueError):
            SuiteConfig(k=3, m=2).validate()
        with pytest.raises(ValueError):
            SuiteConfig(tol_float=0.0).validate()
        with pytest.raises(ValueError):
            SuiteConfig(fmt="xml").validate()

    def test_zero_field_residuals(self):
        # identity residual helpers are exactly zero on the zero field
        from raymoments import (collapsed_derivative_residual,
                                john_power_residual, random_phase_point)
        zero = sym_field(2, 2, {})
        pt = random_phase_point(2, random.Random(11))
        assert john_power_residual(zero, 1, (1,), pt) == 0.0
        assert collapsed_derivative_residual(zero, 1, (1,), pt) == 0.0


class TestMutationSensitivity:
    """Flipping any single series term must break at least one suite check."""

    @pytest.mark.parametrize("flip_ell", [0, 1, 2])
    def test_sign_flip_in_operator_series(self, monkeypatch, flip_ell):
        original = diffops._series_term

        def mutated(count, ell):
            value = original(count, ell)
            return -value if ell == flip_ell else value

        monkeypatch.setattr(diffops, "_series_term", mutated)
        result = suite_kernel(SuiteConfig(n=2, m=2, k=0, seed=7, samples=6))
        assert not result.passed

    @pytest.mark.parametrize("flip_ell", [0, 1])
    def test_binomial_bump_in_operator_series(self, monkeypatch, flip_ell):
        original = diffops._series_term

        def mutated(count, ell):
            value = original(count, ell)
            return value * 2 if ell == flip_ell else value

        monkeypatch.setattr(diffops, "_series_term", mutated)
        result = suite_kernel(SuiteConfig(n=2, m=2, k=1, seed=7, samples=6))
        assert not result.passed

    @pytest.mark.parametrize("flip_p", [0, 1, 2])
    def test_sign_flip_in_recovery_series(self, monkeypatch, flip_p):
        original = moments._recovery_term

        def mutated(r, p):
            value = original(r, p)
            return -value if p == flip_p else value

        monkeypatch.setattr(moments, "_recovery_term", mutated)
        result = suite_identities(SuiteConfig(n=2, m=2, k=1, seed=7, samples=6))
        assert not result.passed
        broken = [rec for rec in result.records if not rec.passed]
        assert all(rec.check_id.startswith("restricted-recovery") for rec in broken)


class TestSerialization:
    def test_roundtrip_exact(self):
        f = random_field(3, 2, 2, 99)
        text = serialize_field(f)
        assert parse_field(text) == f

    def test_rank_zero_roundtrip(self):
        f = sym_field(2, 0, {(): PolyGauss(Polynomial(2, {(1, 1): Fraction(-3, 4)}))})
        assert parse_field(serialize_field(f)) == f

    def test_key_order_canonicalized(self):
        text = json.dumps({
            "n": 2, "rank": 2,
            "components": {"2,1": [{"exp": [0, 0], "coef": "1/1"}]},
        })
        f = parse_field(text)
        assert f.get((1, 2)).poly == Polynomial(2, {(0, 0): Fraction(1)})

    def test_duplicate_canonical_keys_rejected(self):
        text = json.dumps({
            "n": 2, "rank": 2,
            "components": {
                "1,2": [{"exp": [0, 0], "coef": "1"}],
                "2,1": [{"exp": [0, 0], "coef": "2"}],
            },
        })
        with pytest.raises(verify.FieldParseError, match="duplicate"):
            parse_field(text)

    def test_rational_normalization(self):
        text = json.dumps({
            "n": 2, "rank": 0,
            "components": {"": [{"exp": [0, 0], "coef": "3/6"}]},
        })
        f = parse_field(text)
        assert f.get(()).poly.terms[(0, 0)] == Fraction(1, 2)

    def test_malformed_json_reports_position(self):
        with pytest.raises(verify.FieldParseError, match="line 1"):
            parse_field("{not json")

    def test_bad_payloads(self):
        base = {"n": 2, "rank": 1}
        bad = [
            {**base, "components": {"1": [{"exp": [0], "coef": "1"}]}},
            {**base, "components": {"1": [{"exp": [0, -1], "coef": "1"}]}},
            {**base, "components": {"1": [{"exp": [0, 0], "coef": "1/0"}]}},
            {**base, "components": {"1": [{"exp": [0, 0], "coef": "x"}]}},
            {**base, "components": {"3": [{"exp": [0, 0], "coef": "1"}]}},
            {**base, "components": {"1,1": [{"exp": [0, 0], "coef": "1"}]}},
            {**base, "components": {"1": [{"coef": "1"}]}},
            {"n": 2, "components": {}},
        ]
        for payload in bad:
            with pytest.raises(verify.FieldParseError):
                parse_field(json.dumps(payload))


class TestCli:
    def test_exit_zero_on_pass(self, capsys):
        code = main(["--suite", "kernel", "--n", "2", "--m", "1", "--k", "0",
                     "--seed", "7", "--samples", "5"])
        assert code == 0
        out = capsys.readouterr().out
        assert "overall: PASS" in out

    def test_bad_order_exits_two(self):
        with pytest.raises(SystemExit) as err:
            main(["--k", "3", "--m", "2"])
        assert err.value.code == 2

    def test_bad_flag_exits_two(self):
        with pytest.raises(SystemExit) as err:
            main(["--suite", "nonsense"])
        assert err.value.code == 2

    def test_failure_exits_one(self, monkeypatch, capsys):
        original = diffops._series_term
        monkeypatch.setattr(diffops, "_series_term",
                            lambda count, ell: -original(count, ell)
                            if ell == 0 else original(count, ell))
        code = main(["--suite", "kernel", "--n", "2", "--m", "1", "--k", "0",
                     "--samples", "4"])
        assert code == 1
        assert "FAIL" in capsys.readouterr().out

    def test_json_report(self, capsys):
        code = main(["--suite", "kernel", "--n", "2", "--m", "1", "--k", "0",
                     "--samples", "4", "--format", "json"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["pass"] is True
        record = payload["suites"][0]["records"][0]
        assert set(record) == {"suite", "check_id", "identity", "residual",
                               "exact", "pass"}

    def test_csv_report(self, capsys):
        code = main(["--suite", "kernel", "--n", "2", "--m", "1", "--k", "0",
                     "--samples", "4", "--format", "csv"])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "suite,check_id,identity,residual,exact,pass"
        assert len(lines) > 1

    def test_out_file(self, tmp_path):
        target = tmp_path / "report.json"
        code = main(["--suite", "kernel", "--n", "2", "--m", "1", "--k", "0",
                     "--samples", "4", "--format", "json", "--out", str(target)])
        assert code == 0
        assert json.loads(target.read_text())["pass"] is True

    def test_field_loading(self, tmp_path, capsys):
        f = random_field(2, 2, 2, 1234)
        path = tmp_path / "field.json"
        path.write_text(serialize_field(f))
        code = main(["--suite", "identities", "--n", "2", "--m", "2", "--k", "1",
                     "--samples", "3", "--field", str(path)])
        assert code == 0
        capsys.readouterr()

    def test_field_rank_mismatch_exits_two(self, tmp_path):
        f = random_field(2, 1, 1, 8)
        path = tmp_path / "field.json"
        path.write_text(serialize_field(f))
        with pytest.raises(SystemExit) as err:
            main(["--suite", "identities", "--m", "2", "--field", str(path)])
        assert err.value.code == 2

    def test_missing_field_file_exits_two(self):
        with pytest.raises(SystemExit) as err:
            main(["--field", "/nonexistent/field.json"])
        assert err.value.code == 2
