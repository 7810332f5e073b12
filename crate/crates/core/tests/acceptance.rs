//! Acceptance criteria 1 to 10, one PASS/FAIL line each.
//!
//! Reference values come from oracles written here: permutation
//! symmetrization, a scaled Taylor matrix exponential, and closed forms.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use dicke_core::analysis::{rabi_trace_tuned, selectivity_sweep, timescale_check, SweepProtocol, Tuning};
use dicke_core::dsl::parse_schedule;
use dicke_core::dynamics::{evolve_timedep, evolve_timedep_observed, EvolutionSpec, FnHamiltonian, Propagator};
use dicke_core::hamiltonians::{
    effective_hamiltonian, free_hamiltonian, inhomogeneous_resonance_shift, resonance_delta0,
    symmetric_effective_hamiltonian, symmetric_interaction_hamiltonian, DoubletTarget,
};
use dicke_core::protocols::{
    atomic_coherent_prep, dicke_coefficients, dicke_ladder, discrimination_trials, prepare_w_state, run_schedule,
    FidelityModel, RunOptions,
};
use dicke_core::spaces::{
    build_collective_number_basis, dicke_ground_count, dicke_ladder_coeff, dicke_raising, dicke_state, DEFAULT_DROP_TOL,
};
use dicke_core::{Complex64, ConfigSpec, IonChainConfig, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex64;
type Mat = Vec<Vec<C>>;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------- oracles

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn permute_bits(x: usize, perm: &[usize]) -> usize {
    perm.iter()
        .enumerate()
        .filter(|(j, _)| x >> j & 1 == 1)
        .fold(0, |acc, (_, &p)| acc | 1 << p)
}

/// Average of a register vector over all ion permutations.
fn symmetrize(v: &[C], perms: &[Vec<usize>]) -> Vec<C> {
    let mut out = vec![ZERO; v.len()];
    for p in perms {
        for (x, a) in v.iter().enumerate() {
            out[permute_bits(x, p)] += *a;
        }
    }
    let m = perms.len() as f64;
    out.iter().map(|a| a / m).collect()
}

fn normalize(v: &[C]) -> Vec<C> {
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter().map(|a| a / norm).collect()
}

fn raise_all(v: &[C], n: usize) -> Vec<C> {
    let mut out = vec![ZERO; v.len()];
    for (x, a) in v.iter().enumerate() {
        for j in 0..n {
            if x >> j & 1 == 0 {
                out[x | 1 << j] += *a;
            }
        }
    }
    out
}

fn ground_count(v: &[C], n: usize) -> f64 {
    v.iter()
        .enumerate()
        .map(|(x, a)| a.norm_sqr() * (n - (x as u32).count_ones() as usize) as f64)
        .sum()
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut out = vec![vec![ZERO; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == ZERO {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// `exp(-i H t)` by scaling and squaring of a Taylor series.
fn expm_taylor(h: &Mat, t: f64) -> Mat {
    let n = h.len();
    let norm = h.iter().map(|r| r.iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max) * t.abs();
    let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let s = t / 2f64.powi(squarings);
    let a: Mat = h.iter().map(|r| r.iter().map(|x| x * C::new(0.0, -s)).collect()).collect();
    let mut result: Mat = (0..n).map(|i| (0..n).map(|j| if i == j { ONE } else { ZERO }).collect()).collect();
    let mut term = result.clone();
    for k in 1..30 {
        term = mat_mul(&term, &a);
        for r in &mut term {
            for x in r.iter_mut() {
                *x /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = mat_mul(&result, &result);
    }
    result
}

fn mat_vec(m: &Mat, v: &[C]) -> Vec<C> {
    m.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn to_mat(op: &dicke_core::OperatorMatrix) -> Mat {
    let e = op.entries();
    (0..e.nrows()).map(|i| (0..e.ncols()).map(|j| e[(i, j)]).collect()).collect()
}

fn sup_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn config(n: usize, n_max: usize, ratio: f64) -> IonChainConfig {
    ConfigSpec::new(n, n_max).ratio(ratio).build().expect("config")
}

// ---------------------------------------------------------------- criteria

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=6 {
        let perms = permutations(n);
        let dim = 1 << n;
        let mut oracle = Vec::new();
        for k in 0..=n {
            let mut product = vec![ZERO; dim];
            product[(1 << k) - 1] = ONE;
            oracle.push(normalize(&symmetrize(&product, &perms)));
        }
        let raising = dicke_raising(n);
        let count = dicke_ground_count(n);
        for k in 0..=n {
            let lib = dicke_state(n, k).unwrap();
            worst = worst.max(sup_diff(lib.amplitudes().as_slice(), &oracle[k]));
            let n_g = ground_count(&oracle[k], n);
            worst = worst.max((n_g - (n - k) as f64).abs());
            worst = worst.max((count[(k, k)] - C::new(n_g, 0.0)).norm());
            if k < n {
                let f = dot(&oracle[k + 1], &raise_all(&oracle[k], n));
                worst = worst.max((dicke_ladder_coeff(n, k).unwrap() - f.re).abs());
                worst = worst.max((raising[(k + 1, k)] - f).norm());
            }
        }
        // symmetric Hamiltonian = isometry restriction of the register one
        if n <= 4 {
            let cfg = config(n, 2, 40.0);
            let full = effective_hamiltonian(&cfg).unwrap();
            let sym = symmetric_effective_hamiltonian(&cfg).unwrap();
            let fb = *full.basis();
            let sb = *sym.basis();
            let embed = |k: usize, f: usize| {
                let mut v = vec![ZERO; fb.dim()];
                for (x, a) in oracle[k].iter().enumerate() {
                    v[fb.index(0, x, f)] = *a;
                }
                v
            };
            let hf = to_mat(&full);
            for k1 in 0..=n {
                for f1 in 0..=2 {
                    let hv = mat_vec(&hf, &embed(k1, f1));
                    for k2 in 0..=n {
                        for f2 in 0..=2 {
                            let proj = dot(&embed(k2, f2), &hv);
                            let lib = sym.entries()[(sb.index(0, k2, f2), sb.index(0, k1, f1))];
                            worst = worst.max((proj - lib).norm());
                        }
                    }
                }
            }
        }
    }
    outcome(worst <= 1e-12, format!("max deviation {worst:.3e} (tol 1e-12)"))
}

fn criterion_2() -> Outcome {
    let target = DoubletTarget::blue(0, 0);
    let cfg = config(3, 6, 50.0).with_uniform_delta0(resonance_delta0(&target, 3));
    let omega0 = cfg.homogeneous_omega0().unwrap();
    let t_final = 50.0 / omega0;
    let dt = 1e-5;
    let h_static = symmetric_effective_hamiltonian(&cfg).unwrap();
    let basis = *h_static.basis();
    let h0 = to_mat(&free_hamiltonian(&cfg, &basis).unwrap());
    let hs = to_mat(&h_static);
    let psi0 = StateVector::basis_state(basis, basis.index(0, 0, 0)).unwrap();
    let h_t = FnHamiltonian(|t: f64| symmetric_interaction_hamiltonian(&cfg, t));
    let spec = EvolutionSpec::integrate(dt).unwrap();
    let mut samples = Vec::new();
    let mut step = 0usize;
    let result = evolve_timedep_observed(&h_t, &psi0, 0.0, t_final, &spec, |t, psi| {
        step += 1;
        if step.is_multiple_of(2000) {
            samples.push((t, psi.amplitudes().as_slice().to_vec()));
        }
    });
    if let Err(e) = result {
        return outcome(false, format!("integration failed: {e}"));
    }
    let mut worst = 0.0f64;
    for (t, amps) in &samples {
        let lab = mat_vec(&expm_taylor(&hs, *t), psi0.amplitudes().as_slice());
        // ψ_I = exp(+iH₀t) ψ_S with H₀ diagonal
        let inter: Vec<C> = lab
            .iter()
            .enumerate()
            .map(|(i, a)| a * C::from_polar(1.0, h0[i][i].re * t))
            .collect();
        worst = worst.max(sup_diff(amps, &inter));
    }
    outcome(
        worst <= 1e-8,
        format!("sup-norm {worst:.3e} over {} samples, Ω₀t ∈ [0, 50] (tol 1e-8)", samples.len()),
    )
}

fn criterion_3() -> Outcome {
    let cfg = config(3, 6, 100.0);
    let schedule = prepare_w_state(&cfg).unwrap();
    let options = RunOptions {
        model: Some(FidelityModel::FullSymmetric),
        ..RunOptions::default()
    };
    let result = run_schedule(&schedule, &options).unwrap();
    let b = result.basis;
    let fid = result.final_state.amplitudes()[b.index(0, 1, 1)].norm_sqr();
    let sweep = selectivity_sweep(&cfg, SweepProtocol::WState, &[10.0, 30.0, 100.0, 300.0]).unwrap();
    let decreasing = sweep.infidelity.windows(2).all(|w| w[1] < w[0]);
    outcome(
        fid >= 0.98 && decreasing,
        format!(
            "F(|1,D1⟩) = {fid:.6} at ratio 100 (≥ 0.98); infidelity {:?} strictly decreasing: {decreasing}",
            sweep.infidelity.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>()
        ),
    )
}

fn criterion_4() -> Outcome {
    let n = 4;
    let n_max = 4;
    let cfg = config(n, n_max, 100.0).with_uniform_delta0(resonance_delta0(&DoubletTarget::blue(0, 1), n));
    let h = effective_hamiltonian(&cfg).unwrap();
    let prop = Propagator::new(&h).unwrap();
    let basis = *h.basis();
    let perms = permutations(n);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let mut amps = vec![ZERO; basis.dim()];
        for k in 0..=n {
            let d = dicke_state(n, k).unwrap();
            for f in 0..=n_max {
                let c = C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                for (x, a) in d.amplitudes().iter().enumerate() {
                    amps[basis.index(0, x, f)] += c * a;
                }
            }
        }
        let psi = StateVector::from_vec(basis, normalize(&amps)).unwrap();
        let t = rng.random_range(0.0..20.0);
        let out = prop.apply(&psi, t).unwrap();
        let mut kept = 0.0;
        for f in 0..=n_max {
            let slice: Vec<C> = (0..1 << n).map(|x| out.amplitudes()[basis.index(0, x, f)]).collect();
            kept += symmetrize(&slice, &perms).iter().map(|a| a.norm_sqr()).sum::<f64>();
        }
        worst = worst.max(1.0 - kept);
    }
    outcome(worst < 1e-10, format!("max nonsymmetric population {worst:.3e} over 20 times (< 1e-10)"))
}

fn criterion_5() -> Outcome {
    let n = 4;
    let mut worst = 0.0f64;
    for k in 1..=n {
        let cfg = config(n, 4, 100.0);
        let schedule = dicke_ladder(&cfg, k).unwrap();
        let options = RunOptions {
            model: Some(FidelityModel::TwoLevel),
            ..RunOptions::default()
        };
        let result = run_schedule(&schedule, &options).unwrap();
        let b = result.basis;
        let f = result.final_state.amplitudes()[b.index(0, k, k % 2)].norm_sqr();
        worst = worst.max((1.0 - f).abs());
    }
    let cfg = config(n, 6, 100.0);
    let result = run_schedule(
        &dicke_ladder(&cfg, 2).unwrap(),
        &RunOptions {
            model: Some(FidelityModel::FullSymmetric),
            ..RunOptions::default()
        },
    )
    .unwrap();
    let b = result.basis;
    let f2 = result.final_state.amplitudes()[b.index(0, 2, 0)].norm_sqr();
    outcome(
        worst <= 1e-12 && f2 >= 0.95,
        format!("two-level max |1-F| {worst:.3e} (tol 1e-12); symmetric F(D2) = {f2:.6} (≥ 0.95)"),
    )
}

/// `|⟨D_k|exp(iθĴx)|D₀⟩|²` with `Ĵx = Ĵ⁺ + Ĵ⁻` built from `√((k+1)(N-k))`.
fn coherent_weight(n: usize, theta: f64, k: usize) -> f64 {
    let mut jx: Mat = vec![vec![ZERO; n + 1]; n + 1];
    for m in 0..n {
        let f = (((m + 1) * (n - m)) as f64).sqrt();
        jx[m + 1][m] = C::new(f, 0.0);
        jx[m][m + 1] = C::new(f, 0.0);
    }
    let u = expm_taylor(&jx, -theta);
    u[k][0].norm_sqr()
}

fn discrimination_check(theta: f64, seed: u64) -> (bool, String) {
    let n = 4;
    let k0 = 2;
    let trials = 10_000u64;
    let cfg = config(n, 4, 100.0);
    let coeffs = dicke_coefficients(&atomic_coherent_prep(&cfg, theta).unwrap()).unwrap();
    let p = coherent_weight(n, theta, k0 - 1);
    let stats = discrimination_trials(&cfg, &coeffs, k0, 0, Some(FidelityModel::TwoLevel), trials, seed).unwrap();
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    let dev = (stats.frequency - p).abs();
    let pass = dev <= 3.0 * sigma && (stats.probability - p).abs() <= 1e-12;
    (
        pass,
        format!(
            "θ={theta:.4}: freq {:.4} vs |c1|² {p:.6} (3σ = {:.4}), Born {:.6}",
            stats.frequency,
            3.0 * sigma,
            stats.probability
        ),
    )
}

fn criterion_6() -> Outcome {
    let (a, da) = discrimination_check(FRAC_PI_2, 6);
    let (b, db) = discrimination_check(FRAC_PI_4, 7);
    outcome(a && b, format!("{da}; {db}"))
}

fn criterion_7() -> Outcome {
    let omega = 1e5;
    let mut worst = 0.0f64;
    let mut ok = true;
    for n in 1..=8 {
        let ts = timescale_check(omega, n).unwrap();
        let oracle = PI / (2.0 * (n as f64).sqrt() * omega);
        worst = worst.max(ts.pulse_time);
        ok &= (ts.pulse_time - oracle).abs() <= 1e-18 && ts.pulse_time <= 1e-4 && ts.fits_pulse_budget;
        ok &= ts.fits_decoherence_budget && ts.pulse_time < 1e-2;
    }
    outcome(ok, format!("longest π pulse {worst:.3e} s (≤ 1e-4 s, τ_d = 1e-2 s)"))
}

fn criterion_8() -> Outcome {
    let cfg = ConfigSpec::new(2, 4)
        .ratio(100.0)
        .inhom(vec![1.0, 1.3])
        .build()
        .unwrap()
        .with_uniform_delta0(0.0);
    let target = DoubletTarget::blue(0, 0).with_branch(0);
    let cnb = build_collective_number_basis(&cfg, 2, DEFAULT_DROP_TOL).unwrap();
    let shift = inhomogeneous_resonance_shift(&cfg, &cnb, &target).unwrap();
    let lo = cnb.get(0, 0).unwrap().state.amplitudes().as_slice().to_vec();
    let hi = cnb.get(1, 0).unwrap().state.amplitudes().as_slice().to_vec();
    // ⟨Σⱼ Ω₀ʲ(n - δ₀ʲ - s)|gⱼ⟩⟨gⱼ|⟩ for each member
    let energy = |v: &[C], n: f64| -> f64 {
        v.iter()
            .enumerate()
            .map(|(x, a)| {
                (0..2)
                    .filter(|j| x >> j & 1 == 0)
                    .map(|j| cfg.omega0(j) * (n - cfg.delta0()[j] - shift))
                    .sum::<f64>()
                    * a.norm_sqr()
            })
            .sum()
    };
    let residual = (energy(&hi, 1.0) - energy(&lo, 0.0)).abs();
    let g = {
        let w = cfg.omega_eff_all();
        let raised = {
            let mut out = [ZERO; 4];
            for (x, a) in lo.iter().enumerate() {
                for (j, wj) in w.iter().enumerate() {
                    if x >> j & 1 == 0 {
                        out[x | 1 << j] += wj * a;
                    }
                }
            }
            out
        };
        dot(&hi, &raised).norm()
    };
    let times: Vec<f64> = (0..=400).map(|i| PI / g * i as f64 / 400.0).collect();
    let tuned = rabi_trace_tuned(&cfg, &target, FidelityModel::FullRegister, Tuning::Delta0(shift), &times).unwrap();
    let zero = rabi_trace_tuned(&cfg, &target, FidelityModel::FullRegister, Tuning::Delta0(0.0), &times).unwrap();
    let (on, off) = (tuned.max_transfer(), zero.max_transfer());
    outcome(
        residual <= 1e-12 && on >= 0.95 && off < 0.5,
        format!("shift {shift:.6}, residual {residual:.3e} (tol 1e-12); transfer {on:.4} (≥ 0.95) tuned, {off:.3e} (< 0.5) at zero shift"),
    )
}

fn criterion_9() -> Outcome {
    let target = DoubletTarget::blue(0, 0);
    let cfg = config(3, 4, 3.0).with_uniform_delta0(resonance_delta0(&target, 3));
    let h = symmetric_effective_hamiltonian(&cfg).unwrap();
    let radius = Propagator::new(&h).unwrap().eigenvalues().iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let t_final = 17.0 / radius;
    let basis = *h.basis();
    let psi0 = StateVector::basis_state(basis, basis.index(0, 0, 0)).unwrap();
    let exact = mat_vec(&expm_taylor(&to_mat(&h), t_final), psi0.amplitudes().as_slice());
    let eig = Propagator::new(&h).unwrap().apply(&psi0, t_final).unwrap();
    let oracle_gap = sup_diff(eig.amplitudes().as_slice(), &exact);
    let mut errors = Vec::new();
    for steps in [1000.0, 2000.0, 4000.0] {
        let spec = EvolutionSpec {
            norm_tol: 0.5,
            truncation_tol: 1.0,
            ..EvolutionSpec::integrate(t_final / steps).unwrap()
        };
        let psi = evolve_timedep(&h, &psi0, t_final, &spec).unwrap();
        let err = psi.amplitudes().iter().zip(&exact).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        errors.push(err);
    }
    let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
    let pass = oracle_gap <= 1e-12 && ratios.iter().all(|r| (8.0..=32.0).contains(r));
    outcome(
        pass,
        format!(
            "ρT = {:.1}, errors {:.3e} {:.3e} {:.3e}, ratios {:.2} {:.2} (16 within ×2), oracle gap {oracle_gap:.1e}",
            radius * t_final,
            errors[0],
            errors[1],
            errors[2],
            ratios[0],
            ratios[1]
        ),
    )
}

fn corpus() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("schedules");
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "sched"))
        .collect();
    files.sort();
    files
}

fn criterion_10() -> Outcome {
    let mut notes = Vec::new();
    let files = corpus();
    let mut round_trip = files.len() >= 10;
    for f in &files {
        let text = std::fs::read_to_string(f).unwrap();
        let ok = parse_schedule(&text).ok().and_then(|doc| {
            let canon = doc.to_text().ok()?;
            let again = parse_schedule(&canon).ok()?;
            Some(doc.same_schedule(&again) && again.to_text().ok()? == canon)
        });
        if ok != Some(true) {
            round_trip = false;
            notes.push(format!("round trip failed for {}", f.display()));
        }
    }
    // (input, expected line, message fragment)
    let malformed: [(&str, usize, &str); 10] = [
        ("", 1, "missing config stanza"),
        ("# only a comment\n", 1, "missing config stanza"),
        ("config N=4 nmax=8 ratio=100\npulse blue k0=4 n0=0 angle=pi", 2, "k0 exceeds N-1 = 3"),
        ("config N=4 nmax=8 ratio=abc", 1, ""),
        ("config N=4 nmax=8 ratio=100\ninit fock=0 dicke=0\npulse blue k0=0 angle=pie", 3, ""),
        ("config N=4 nmax=8 ratio=100\nfrobnicate", 2, ""),
        ("config N=4 nmax=8 ratio=100\npulse green k0=0 angle=pi", 2, ""),
        ("config N=4 nmax=8 ratio=100\ninit fock=0 dicke=0 colour=red", 2, ""),
        ("config N=2 nmax=4 ratio=100\n\n\nexpect fock=1 bits=eeg", 4, ""),
        ("config N=4 nmax=8 ratio=100\nseed -3", 2, ""),
    ];
    let mut diagnostics = true;
    for (input, line, fragment) in malformed {
        match parse_schedule(input) {
            Ok(_) => {
                diagnostics = false;
                notes.push(format!("accepted malformed input {input:?}"));
            }
            Err(e) => {
                if e.line != line || e.column == 0 || !e.message.contains(fragment) {
                    diagnostics = false;
                    notes.push(format!("unexpected diagnostic for {input:?}: {e}"));
                }
            }
        }
    }
    let bin = env!("CARGO_BIN_EXE_dicke");
    let sched = Path::new(env!("CARGO_MANIFEST_DIR")).join("schedules/discriminate.sched");
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let status = Command::new(bin)
            .args(["run", sched.to_str().unwrap(), "--seed", "11", "--out", out.to_str().unwrap()])
            .env("NO_COLOR", "1")
            .output()
            .unwrap();
        let read = |name: &str| std::fs::read(out.join(name)).unwrap_or_default();
        outputs.push((status.status.success(), read("trace.csv"), read("result.json"), read("trace.svg")));
    }
    let identical = outputs[0].0 && outputs[1].0 && !outputs[0].1.is_empty() && outputs[0] == outputs[1];
    if !identical {
        notes.push("reruns differ".into());
    }
    outcome(
        round_trip && diagnostics && identical,
        format!(
            "{} corpus files round-trip: {round_trip}; diagnostics: {diagnostics}; byte-identical reruns: {identical}{}",
            files.len(),
            if notes.is_empty() { String::new() } else { format!(" [{}]", notes.join("; ")) }
        ),
    )
}

fn main() -> ExitCode {
    type Criterion = (usize, f64, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        (1, 5.0, criterion_1),
        (2, 30.0, criterion_2),
        (3, 120.0, criterion_3),
        (4, 60.0, criterion_4),
        (5, 120.0, criterion_5),
        (6, 60.0, criterion_6),
        (7, 1.0, criterion_7),
        (8, 60.0, criterion_8),
        (9, 30.0, criterion_9),
        (10, 5.0, criterion_10),
    ];
    let mut failures = 0;
    for (id, budget, run) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| outcome(false, "panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let pass = result.pass && secs < budget;
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {id:>2}: {}  {} ({secs:.2} s, budget {budget} s)",
            if pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!("{} of 10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
