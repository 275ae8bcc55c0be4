//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::process::Command;
use std::time::Instant;

use cpsf_core::linsys::{eigen_stability, susceptibility_numeric, A, A_DAG, B, B_DAG, D, D_DAG};
use cpsf_core::noise::{keldysh_and_teff, scattering_and_reflectivity, thermal_occupation, BathOccupations};
use cpsf_core::opa::{negativity_window, opa_cpsf, OpaParams};
use cpsf_core::response::{chi_elements, cpsf_on_resonance, greens, self_energy};
use cpsf_core::stability::{negativity_check, stability_report};
use cpsf_core::{Complex64, DimensionlessParams, SystemParams};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn dimless(c0: f64, c1: f64, xm: f64, xd: f64) -> DimensionlessParams {
    DimensionlessParams::new(c0, c1, xm, xd, 1e4, 1.0).unwrap()
}

/// Random parameter set that is strictly eigen-stable and away from ξ = 1.
fn random_stable(rng: &mut StdRng, phases: bool) -> SystemParams {
    loop {
        let c0: f64 = rng.random_range(0.1..6.0);
        let c1: f64 = rng.random_range(0.0..2.0);
        let xm: f64 = rng.random_range(0.0..1.5 * (1.0 + c0));
        let xd: f64 = rng.random_range(0.0..1.5 * (1.0 + c1));
        if (xm - 1.0).abs() < 1e-3 || (xd - 1.0).abs() < 1e-3 {
            continue;
        }
        let kog = 10f64.powf(rng.random_range(1.0..4.0));
        let ratio = 10f64.powf(rng.random_range(-0.7..0.7));
        let Ok(d) = DimensionlessParams::new(c0, c1, xm, xd, kog, ratio) else {
            continue;
        };
        let mut p = d.to_system().unwrap();
        if phases {
            p = p.with_phases(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        }
        let v = eigen_stability(&p);
        if v.max_real_part < -1e-3 * p.gamma_m.min(p.gamma_d) {
            return p;
        }
    }
}

/// Uniform points on [−5, 5] plus points clustered around ω = 0.
fn test_frequencies(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            if k % 2 == 0 {
                rng.random_range(-5.0..5.0)
            } else {
                let mag = 10f64.powf(rng.random_range(-7.0..0.0));
                if rng.random_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            }
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut failures = 0usize;
    for set in 0..20 {
        let p = random_stable(&mut rng, set % 2 == 1);
        for w in test_frequencies(&mut rng, 200) {
            let (Ok(c), Ok(n)) = (chi_elements(&p, w), susceptibility_numeric(&p, w)) else {
                failures += 1;
                continue;
            };
            let row = [A, A_DAG, B, B_DAG, D, D_DAG].map(|j| n.entries[(0, j)]);
            let scale = row.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for (x, y) in c.to_array().iter().zip(row) {
                let err = (x - y).norm() / y.norm().max(1e-3 * scale);
                worst = worst.max(err);
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    Outcome {
        id: "1",
        title: "closed-form susceptibility row vs 6x6 inverse, 20 sets x 200 frequencies",
        pass: failures == 0 && worst <= 1e-10 && elapsed < 5.0,
        detail: format!("max rel err {worst:.2e} (tol 1e-10), {failures} failed solves, {elapsed:.2}s (limit 5s)"),
    }
}

fn criterion_2() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let c0 = rng.random_range(0.0..10.0);
        let c1 = if k < 10 { 0.0 } else { rng.random_range(0.0..10.0) };
        let p = dimless(c0, c1, 0.0, 0.0).to_system().unwrap();
        let want = 4.0 / (1.0 + c0 + c1);
        let got = greens(&p, 0.0).unwrap().cpsf;
        let alg = cpsf_on_resonance(&dimless(c0, c1, 0.0, 0.0)).unwrap().a0;
        worst = worst.max(((got - want) / want).abs()).max(((alg - want) / want).abs());
    }
    Outcome {
        id: "2",
        title: "no modulation: kappa*A(0) = 4/(1+C0+C1)",
        pass: worst <= 1e-12,
        detail: format!("100 samples (10 with C1=0), max rel err {worst:.2e} (tol 1e-12)"),
    }
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for c0 in [0.5, 1.0, 2.0, 3.7, 6.0, 8.0] {
        let m = |xi: f64| greens(&dimless(c0, 0.0, xi, 0.0).to_system().unwrap(), 0.0).unwrap().cpsf;
        let (mut lo, mut hi) = (1.0 + 1e-6, 1.0 + c0 - 1e-6);
        if !(m(lo) > 0.0 && m(hi) < 0.0) {
            ok = false;
            continue;
        }
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if m(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        worst = worst.max((0.5 * (lo + hi) - (1.0 + c0).sqrt()).abs());
    }
    Outcome {
        id: "3",
        title: "single-oscillator onset at xi_m = sqrt(1+C0)",
        pass: ok && worst <= 1e-10,
        detail: format!("6 cooperativities, max |xi* - sqrt(1+C0)| = {worst:.2e} (tol 1e-10)"),
    }
}

fn criterion_4() -> Vec<Outcome> {
    let points = [
        ("4a", -3.0, 1.390, 0.931, 0.05),
        ("4b", -10.0, 1.393, 0.935, 0.10),
        ("4c", -15.0, 1.394, 0.936, 0.10),
    ];
    points
        .iter()
        .map(|&(id, target, xm, xd, tol)| {
            let d = dimless(2.0, 0.25, xm, xd);
            let m = greens(&d.to_system().unwrap(), 0.0).unwrap().cpsf;
            let r = stability_report(&d).unwrap();
            let dev = ((m - target) / target).abs();
            Outcome {
                id,
                title: "reference two-oscillator paramps reproduce the target negativity",
                pass: dev <= tol && r.stable_closed_form && r.stable_eigen,
                detail: format!(
                    "(xi_m, xi_d) = ({xm}, {xd}): kappa*A(0) = {m:.4} vs {target} ({:.1}% off, tol {:.0}%), closed-form stable {}, eigen stable {}",
                    100.0 * dev,
                    100.0 * tol,
                    r.stable_closed_form,
                    r.stable_eigen
                ),
            }
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let p = dimless(2.0, 0.25, 1.390, 0.931).to_system().unwrap();
    let se = self_energy(&p, 0.0).unwrap();
    let ratio = (p.kappa - 2.0 * se.sigma_tilde.im) / p.kappa;
    let m = greens(&p, 0.0).unwrap().cpsf * p.kappa;
    let identity = (m * ratio - 4.0).abs() / 4.0;
    Outcome {
        id: "5",
        title: "effective cavity damping at the M=-3 point",
        pass: (ratio + 1.3).abs() <= 0.1 && identity <= 1e-9,
        detail: format!("kappa_eff(0)/kappa = {ratio:.4} (want -1.3 +- 0.1), |M*ratio - 4|/4 = {identity:.2e} (tol 1e-9)"),
    }
}

fn criterion_6() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = random_stable(&mut rng, false);
        let d = p.to_dimensionless().unwrap();
        let mapped = cpsf_on_resonance(&d).unwrap().opa_mapped_a0();
        let direct = greens(&p, 0.0).unwrap().cpsf * p.kappa;
        worst = worst.max(((mapped - direct) / direct).abs());
    }
    Outcome {
        id: "6",
        title: "on-resonance CPSF equals the mapped amplifier value",
        pass: worst <= 1e-9,
        detail: format!("100 stable samples, max rel err {worst:.2e} (tol 1e-9)"),
    }
}

fn criterion_7() -> Outcome {
    let xm_max = stability_report(&dimless(2.0, 0.25, 1.390, 0.931)).unwrap().xi_m_max;
    let xd_max = stability_report(&dimless(2.0, 0.25, 1.390, 0.931)).unwrap().xi_d_max;
    Outcome {
        id: "7",
        title: "stability maxima at the reference operating point",
        pass: (9.0..=9.5).contains(&xm_max) && (0.955..=0.965).contains(&xd_max),
        detail: format!("xi_m_max = {xm_max:.4} (want [9.0, 9.5]), xi_d_max = {xd_max:.5} (want [0.955, 0.965])"),
    }
}

fn criterion_8() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let mut sampled = 0;
    let mut min_a0 = f64::INFINITY;
    while sampled < 10_000 {
        let kappa = 10f64.powf(rng.random_range(-1.0..1.0));
        let o = OpaParams::new(kappa, rng.random_range(0.0..3.0) * kappa, rng.random_range(-2.0..2.0) * kappa).unwrap();
        if !o.is_stable() {
            continue;
        }
        sampled += 1;
        min_a0 = min_a0.min(opa_cpsf(&o, 0.0).unwrap().a * o.kappa);
    }

    let o = OpaParams::from_normalized(1.0, 1.2, 0.5).unwrap();
    let (lo, hi) = negativity_window(&o).unwrap();
    let a = |w: f64| opa_cpsf(&o, w).unwrap().a;
    let root = |mut x0: f64, mut x1: f64| {
        let s0 = a(x0).signum();
        for _ in 0..200 {
            let mid = 0.5 * (x0 + x1);
            if a(mid).signum() == s0 {
                x0 = mid;
            } else {
                x1 = mid;
            }
        }
        0.5 * (x0 + x1)
    };
    let found_lo = root(o.delta_p - 1.0, o.delta_p);
    let found_hi = root(o.delta_p, o.delta_p + 1.0);
    let window_err = (found_lo - lo).abs().max((found_hi - hi).abs());

    let mut mirror: f64 = 0.0;
    for (xi, dk) in [(1.2, 0.5), (1.25, 0.5), (1.2, 0.6), (0.7, 0.3)] {
        let plus = OpaParams::from_normalized(1.0, xi, dk).unwrap();
        let minus = OpaParams::from_normalized(1.0, xi, -dk).unwrap();
        for k in 0..801 {
            let w = -4.0 + 0.01 * k as f64;
            let d = opa_cpsf(&plus, w).unwrap().a - opa_cpsf(&minus, -w).unwrap().a;
            mirror = mirror.max(d.abs());
        }
    }
    Outcome {
        id: "8",
        title: "amplifier positivity at resonance, negativity window, mirror symmetry",
        pass: min_a0 > 0.0 && window_err <= 1e-10 && mirror <= 1e-12,
        detail: format!(
            "min kappa*a(0) over 1e4 stable samples {min_a0:.3e}; window [{lo:.12}, {hi:.12}] located to {window_err:.1e} (tol 1e-10); mirror err {mirror:.1e} (tol 1e-12)"
        ),
    }
}

fn criterion_9() -> Outcome {
    let mut grid: Vec<f64> = (0..=400).map(|k| -5.0 + 0.025 * k as f64).collect();
    for e in -9..=0 {
        for m in [1.0, 2.0, 5.0] {
            grid.push(m * 10f64.powi(e));
        }
    }
    let sets = [
        dimless(2.0, 0.25, 1.390, 0.931),
        dimless(2.0, 0.0, 2.7, 0.0),
        dimless(0.5, 1.5, 0.3, 1.6),
        DimensionlessParams::new(4.0, 0.7, 0.5, 0.8, 300.0, 0.3).unwrap(),
    ];
    let close = |a: Complex64, b: Complex64| (a - b).norm() <= 1e-10 * b.norm().max(1e-300) || (a - b).norm() < 1e-300;
    let mut bad = 0usize;
    let mut count = 0usize;
    for d in &sets {
        let p = d.to_system().unwrap();
        for &w in &grid {
            let (Ok(sp), Ok(sn)) = (self_energy(&p, w), self_energy(&p, -w)) else {
                bad += 1;
                continue;
            };
            let (gp, gn) = (greens(&p, w).unwrap(), greens(&p, -w).unwrap());
            count += 1;
            if !close(sn.sigma_a.conj(), -sp.sigma_a)
                || !close(sn.lambda_tilde.conj(), sp.lambda_tilde)
                || !close(sn.m_coeff.conj(), sp.m_coeff)
                || !close(gn.g_ret_aad.conj(), -gp.g_ret_aad)
            {
                bad += 1;
            }
        }
    }
    Outcome {
        id: "9",
        title: "conjugation symmetries of Sigma, lambda~, M and G^R",
        pass: bad == 0,
        detail: format!("{count} frequency pairs over 4 real-paramp sets, {bad} violations (rel tol 1e-10)"),
    }
}

fn criterion_10() -> Outcome {
    let cavity = SystemParams::new(1.0, 0.01, 0.01, 0.0, 0.0, 0.0, 0.0).unwrap();
    let t = 0.7;
    let mut worst: f64 = 0.0;
    for k in 1..=50 {
        let w = 0.1 * k as f64;
        let b = BathOccupations::new(thermal_occupation(w, t), 0.0, 0.0).unwrap();
        let te = keldysh_and_teff(&cavity, &b, w).unwrap().t_eff.unwrap_or(f64::NAN);
        worst = worst.max(((te - t) / t).abs());
    }
    let worst = if worst.is_nan() { f64::INFINITY } else { worst };

    let p = dimless(2.0, 0.25, 1.390, 0.931).to_system().unwrap();
    let mut in_band = 0;
    let mut negative = 0;
    for k in 0..=300 {
        let w = 10f64.powf(-10.0 + 5.0 * k as f64 / 300.0);
        let s = keldysh_and_teff(&p, &BathOccupations::vacuum(), w).unwrap();
        if s.cpsf < 0.0 {
            in_band += 1;
            if s.t_eff.is_some_and(|x| x < 0.0) {
                negative += 1;
            }
        }
    }
    Outcome {
        id: "10",
        title: "thermal cavity T_eff = T; negative T_eff throughout the negative band",
        pass: worst <= 1e-9 && in_band > 0 && negative == in_band,
        detail: format!(
            "50 frequencies at T = {t}: max rel err {worst:.2e} (tol 1e-9); M=-3 point: {negative}/{in_band} band samples with T_eff < 0"
        ),
    }
}

fn criterion_11() -> Outcome {
    let p = dimless(2.0, 0.25, 1.390, 0.931).to_system().unwrap();
    let mut mismatches = 0;
    let mut negatives = 0;
    let mut grid: Vec<f64> = (0..=400).map(|k| -2e-4 + 1e-6 * k as f64).collect();
    grid.extend((0..=200).map(|k| -2e-6 + 2e-8 * k as f64));
    for &w in &grid {
        let a = greens(&p, w).unwrap().cpsf;
        let r = scattering_and_reflectivity(&p, 0.01, w).unwrap().reflectivity;
        if a < 0.0 {
            negatives += 1;
        }
        if (r > 1.0) != (a < 0.0) {
            mismatches += 1;
        }
    }
    let r0 = scattering_and_reflectivity(&p, 0.01, 0.0).unwrap().reflectivity;
    Outcome {
        id: "11",
        title: "probe reflectivity exceeds 1 exactly where the CPSF is negative",
        pass: mismatches == 0 && negatives > 0 && (r0 - 1.03).abs() <= 0.002,
        detail: format!("{mismatches} mismatches over {} frequencies ({negatives} negative); r(0) = {r0:.5} (want 1.03 +- 0.002)", grid.len()),
    }
}

fn criterion_12() -> Outcome {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_cpsf"))
            .args(["spectrum", "--preset", "fig2a"])
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .map(|o| (o.status.success(), o.stdout))
    };
    let runs: Vec<_> = ["1", "1", "4", "16"].iter().map(|t| run(t)).collect();
    let ok = runs.iter().all(|r| matches!(r, Ok((true, out)) if !out.is_empty()));
    let identical = ok && runs.windows(2).all(|w| w[0].as_ref().unwrap().1 == w[1].as_ref().unwrap().1);
    let bytes = runs.first().and_then(|r| r.as_ref().ok()).map_or(0, |r| r.1.len());
    Outcome {
        id: "12",
        title: "spectrum on the fig2a preset is byte-identical across runs and thread counts",
        pass: identical,
        detail: format!("4 runs (1, 1, 4, 16 threads), {bytes} bytes each, identical = {identical}"),
    }
}

fn main() {
    let mut outcomes = vec![criterion_1(), criterion_2(), criterion_3()];
    outcomes.extend(criterion_4());
    outcomes.extend([
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
        criterion_11(),
        criterion_12(),
    ]);
    // the reference point also passes the two-condition negativity test
    let check = negativity_check(&dimless(2.0, 0.25, 1.390, 0.931)).unwrap();
    assert!(check.negative && check.stable);

    let mut failed = 0;
    for o in &outcomes {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{:>3}] {}: {}", o.id, o.title, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("{} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
