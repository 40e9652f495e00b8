"""Acceptance criteria, one test per criterion.

Each test runs its scenario at the stated tolerance through the verification
suites (shared with the ``verify`` CLI) and prints one pass/fail line.  Heavy
scenarios are session fixtures so each solve runs once.
"""

import pytest

from sbsol.harness.suites import (run_concentration_domain,
                                  run_concentration_trap, run_decay,
                                  run_nehari_props, run_oracle, run_scaling,
                                  run_symmetry, run_threshold)


def report(number, title, checks, detail=""):
    ok = all(c.passed for c in checks)
    line = f"[acceptance] criterion {number:02d} {title}: " \
           f"{'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    print(line)
    for c in checks:
        assert c.passed, (f"{c.name}: measured {c.measured:.6g} "
                          f"not {c.op} {c.threshold:.6g}")


@pytest.fixture(scope="session")
def oracle():
    return run_oracle()


@pytest.fixture(scope="session")
def threshold():
    return run_threshold()


@pytest.fixture(scope="session")
def nehari():
    return run_nehari_props()


@pytest.fixture(scope="session")
def symmetry():
    return run_symmetry()


@pytest.fixture(scope="session")
def scaling():
    return run_scaling()


@pytest.fixture(scope="session")
def trap():
    return run_concentration_trap()


@pytest.fixture(scope="session")
def domain():
    return run_concentration_domain()


@pytest.fixture(scope="session")
def decay(domain):
    return run_decay(domain.artifacts)


def test_criterion_01_analytic_oracle(oracle):
    names = ("oracle_converged", "oracle_c_rel_err", "oracle_u_sup_err",
             "oracle_v_sup_err", "oracle_u_v_sup_diff", "oracle_runtime_s")
    checks = [oracle.check(n) for n in names]
    report(1, "analytic oracle", checks,
           f"c rel err {oracle.check('oracle_c_rel_err').measured:.2e}, "
           f"runtime {oracle.check('oracle_runtime_s').measured:.1f}s")


def test_criterion_02_existence_threshold(threshold):
    checks = list(threshold.checks)
    report(2, "existence threshold", checks,
           f"min converged c "
           f"{threshold.check('threshold_min_converged_c').measured:.4g}")


def test_criterion_03_constraint_properties(nehari):
    names = ("projection_G_over_A_max", "projection_E_identity_max",
             "projection_idempotence_max", "ray_scan_max_at_projection",
             "homogeneity_max_rel_dev", "subcritical_quartic_max",
             "props_runtime_s")
    checks = [nehari.check(n) for n in names]
    report(3, "constraint-set property suite", checks,
           f"worst |G|/A {nehari.check('projection_G_over_A_max').measured:.2e}")


def test_criterion_04_gradient_consistency(nehari):
    names = ("gradient_fd_max_rel_err", "gradient_runtime_s")
    checks = [nehari.check(n) for n in names]
    report(4, "gradient consistency", checks,
           f"max rel err "
           f"{nehari.check('gradient_fd_max_rel_err').measured:.2e}")


def test_criterion_05_radial_symmetry(symmetry):
    checks = list(symmetry.checks)
    report(5, "radial symmetry and monotonicity", checks,
           f"anisotropy {symmetry.check('anisotropy_u').measured:.4f}")


def test_criterion_06_eps_scaling(scaling):
    checks = list(scaling.checks)
    report(6, "eps^N energy scaling", checks,
           f"spreads {scaling.check('scaling_1d_spread').measured:.2e} / "
           f"{scaling.check('scaling_2d_spread').measured:.2e}")


def test_criterion_07_colocation(oracle, symmetry, trap, domain):
    # every converged acceptance run reports |P - Q| <= 2h
    runs = [("oracle", oracle.artifacts["peaks"],
             oracle.artifacts["report"].state.grid,
             oracle.artifacts["model"].epsilon),
            ("oracle_m2", oracle.artifacts["m2_peaks"],
             oracle.artifacts["m2_report"].state.grid, 1.0),
            ("symmetry", symmetry.artifacts["peaks"],
             symmetry.artifacts["report"].state.grid, 1.0)]
    for eps, pk in trap.artifacts["peaks"].items():
        runs.append((f"trap_eps_{eps}", pk,
                     trap.artifacts["reports"][eps].state.grid, eps))
    for eps, pk in domain.artifacts["peaks"].items():
        runs.append((f"domain_eps_{eps}", pk,
                     domain.artifacts["reports"][eps].state.grid, eps))
    worst = 0.0
    for name, pk, grid, eps in runs:
        sep = pk.colocation * eps
        bound = 2.0 * max(grid.spacing)
        worst = max(worst, sep / bound)
        assert sep <= bound, f"{name}: |P-Q| = {sep:.3e} > 2h = {bound:.3e}"
    print(f"[acceptance] criterion 07 peak co-location: PASS "
          f"(worst |P-Q|/(2h) = {worst:.3f} over {len(runs)} runs)")


def test_criterion_08_trap_concentration(trap):
    checks = list(trap.checks)
    report(8, "trap concentration", checks,
           f"peak {trap.artifacts['peaks'][0.1].P[0]:.4f} vs argmin "
           f"{trap.artifacts['cmap'].argmin[0]:.1f}")


def test_criterion_09_domain_concentration(domain):
    checks = list(domain.checks)
    report(9, "domain concentration", checks,
           f"boundary distances "
           f"{domain.artifacts['peaks'][0.1].d_P:.4f}, "
           f"{domain.artifacts['peaks'][0.05].d_P:.4f}")


def test_criterion_10_decay(decay):
    checks = list(decay.checks)
    report(10, "tail decay rate", checks,
           f"scaled rates u {decay.check('decay_u_scaled_rate').measured:.3f}, "
           f"v {decay.check('decay_v_scaled_rate').measured:.3f}")


def test_criterion_11_domain_exhaustion(oracle):
    names = ("exhaustion_max_rel_increase", "exhaustion_settle_rel",
             "exhaustion_c_rel_err")
    checks = [oracle.check(n) for n in names]
    seq = oracle.artifacts["whole_space"].box_sequence
    report(11, "domain exhaustion", checks,
           "sequence " + " -> ".join(f"{c:.8f}" for _, c in seq))


def test_criterion_12_multi_component(oracle):
    names = ("mcomp_v_sup_diff", "mcomp_c_rel_diff", "mcomp_mapped_A_rel_diff",
             "mcomp_mapped_B_rel_diff", "mcomp_runtime_s")
    checks = [oracle.check(n) for n in names]
    report(12, "multi-component generalization", checks,
           f"c rel diff {oracle.check('mcomp_c_rel_diff').measured:.2e}")
