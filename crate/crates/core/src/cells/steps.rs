use super::{Architecture, CellConfig, Geometry, StepStats};
use crate::geometry::linalg::{hadamard, matvec, values};
use crate::geometry::{lorentz, poincare};
use crate::grad::{GateLayout, ParamLayout, Real, ONE_HOT_DIM};

fn one_hot<T: Real>(proto: T, input: Option<u8>) -> Vec<T> {
    let mut x = vec![proto.zero_like(); ONE_HOT_DIM];
    if let Some(k) = input {
        x[k as usize] = proto.constant(1.0);
    }
    x
}

fn norm_of<T: Real>(v: &[T]) -> f64 {
    v.iter().map(|x| x.value() * x.value()).sum::<f64>().sqrt()
}

/// `W h + U x + b`.
fn euclid_affine<T: Real>(
    p: &[T],
    g: &GateLayout,
    n: usize,
    h: &[T],
    input: Option<u8>,
) -> Vec<T> {
    let wh = matvec(g.w.slice(p), n, n, h);
    let u = g.u.slice(p);
    let b = g.b.slice(p);
    (0..n)
        .map(|r| {
            let v = match input {
                Some(k) => wh[r] + u[r * ONE_HOT_DIM + k as usize],
                None => wh[r],
            };
            v + b[r]
        })
        .collect()
}

/// `(W ⊗ h) ⊕ (U ⊗ x) ⊕ b` on the ball, with `x = exp₀(one-hot)`.
fn poincare_affine<T: Real>(
    cfg: &CellConfig,
    p: &[T],
    g: &GateLayout,
    h: &[T],
    input: Option<u8>,
) -> Vec<T> {
    let (n, c) = (cfg.hidden, cfg.c);
    let wh = poincare::matvec(g.w.slice(p), n, n, h, c);
    let x = poincare::exp0(&one_hot(h[0], input), c);
    let ux = poincare::matvec(g.u.slice(p), n, ONE_HOT_DIM, &x, c);
    let s = poincare::mobius_add(&wh, &ux, c);
    poincare::project(&poincare::mobius_add(&s, g.b.slice(p), c), c)
}

/// `(W ⊗_L h) ⊕_L (U ⊗_L x) ⊕_L exp₀(b)` on the hyperboloid.
fn lorentz_affine<T: Real>(
    cfg: &CellConfig,
    p: &[T],
    g: &GateLayout,
    h: &[T],
    input: Option<u8>,
) -> Vec<T> {
    let n = cfg.hidden;
    let wh = lorentz::matvec(g.w.slice(p), n, n, h);
    let x = lorentz::exp0_spatial(&one_hot(h[0], input));
    let ux = lorentz::matvec(g.u.slice(p), n, ONE_HOT_DIM, &x);
    let b = lorentz::exp0_spatial(g.b.slice(p));
    lorentz::add_points(&lorentz::add_points(&wh, &ux), &b)
}

fn poincare_clamp<T: Real>(cfg: &CellConfig, x: Vec<T>, stats: &mut StepStats) -> Vec<T> {
    stats.raw(norm_of(&x));
    let (out, hit) = poincare::clamp(&poincare::project(&x, cfg.c), cfg.radius());
    stats.hit(hit);
    out
}

fn lorentz_clamp<T: Real>(cfg: &CellConfig, x: Vec<T>, stats: &mut StepStats) -> Vec<T> {
    match cfg.l_max {
        Some(l) => {
            let (out, hit) = lorentz::clamp(&x, l);
            stats.hit(hit);
            out
        }
        None => x,
    }
}

fn sigmoid_all<T: Real>(v: &[T]) -> Vec<T> {
    v.iter().map(|&x| x.sigmoid()).collect()
}

/// One recurrence step `h_{i-1} → h_i` of the configured variant.
///
/// `input` is the previous spin, `None` for the all-zero start token.
/// Poincaré states are kept strictly inside the ball and then clamped to
/// `r_max`; Lorentz states are clamped according to [`super::ClampMode`].
pub fn step_raw<T: Real>(
    cfg: &CellConfig,
    layout: &ParamLayout,
    p: &[T],
    h: &[T],
    input: Option<u8>,
    stats: &mut StepStats,
) -> Vec<T> {
    let n = cfg.hidden;
    let gates = &layout.gates;
    stats.steps += 1;
    let out = match (cfg.variant.geometry(), cfg.variant.architecture()) {
        (Geometry::Euclidean, Architecture::Rnn) => {
            let a = euclid_affine(p, &gates[0], n, h, input);
            let out: Vec<T> = a.iter().map(|&x| x.tanh()).collect();
            stats.raw(norm_of(&out));
            out
        }
        (Geometry::Euclidean, Architecture::Gru) => {
            let r = sigmoid_all(&euclid_affine(p, &gates[0], n, h, input));
            let z = sigmoid_all(&euclid_affine(p, &gates[1], n, h, input));
            let rh = hadamard(&r, h);
            let cand: Vec<T> = euclid_affine(p, &gates[2], n, &rh, input)
                .iter()
                .map(|&x| x.tanh())
                .collect();
            let out: Vec<T> = (0..n)
                .map(|i| (-z[i] + 1.0) * h[i] + z[i] * cand[i])
                .collect();
            stats.raw(norm_of(&out));
            out
        }
        (Geometry::Poincare, Architecture::Rnn) => {
            let a = poincare_affine(cfg, p, &gates[0], h, input);
            poincare_clamp(cfg, a, stats)
        }
        (Geometry::Poincare, Architecture::Gru) => {
            let c = cfg.c;
            let gate = |g: &GateLayout| {
                sigmoid_all(&poincare::log0(&poincare_affine(cfg, p, g, h, input), c))
            };
            let r = gate(&gates[0]);
            let z = gate(&gates[1]);
            let rh = poincare::pointwise(&r, h, c);
            let mut cand = poincare_affine(cfg, p, &gates[2], &rh, input);
            if cfg.clamp_candidate {
                let (cc, hit) = poincare::clamp(&cand, cfg.radius());
                stats.hit(hit);
                cand = cc;
            }
            let diff = poincare::mobius_sub(h, &cand, c);
            let upd = poincare::pointwise(&z, &poincare::project(&diff, c), c);
            let out = poincare::mobius_add(h, &upd, c);
            poincare_clamp(cfg, out, stats)
        }
        (Geometry::Lorentz, arch) => {
            let hin = lorentz_clamp(cfg, h.to_vec(), stats);
            let raw = match arch {
                Architecture::Rnn => lorentz_affine(cfg, p, &gates[0], &hin, input),
                Architecture::Gru => {
                    let gate = |g: &GateLayout| {
                        sigmoid_all(&lorentz::log0_spatial(&lorentz_affine(cfg, p, g, &hin, input)))
                    };
                    let r = gate(&gates[0]);
                    let z = gate(&gates[1]);
                    let rh = lorentz::pointwise(&r, &hin);
                    let mut cand = lorentz_affine(cfg, p, &gates[2], &rh, input);
                    if cfg.clamp_candidate {
                        cand = lorentz_clamp(cfg, cand, stats);
                    }
                    let diff = lorentz::add_points(&lorentz::neg(&hin), &cand);
                    let upd = lorentz::pointwise(&z, &diff);
                    lorentz::add_points(&hin, &upd)
                }
            };
            let vals = values(&raw);
            stats.raw(lorentz::spatial_norm(&vals));
            let out = if cfg.clamp_mode == super::ClampMode::Double {
                lorentz_clamp(cfg, raw, stats)
            } else {
                raw
            };
            let vals = values(&out);
            let drift = (lorentz::inner(&vals, &vals) + 1.0).abs();
            stats.max_violation = stats.max_violation.max(drift);
            out
        }
    };
    let passed = match cfg.variant.geometry() {
        Geometry::Lorentz => lorentz::spatial_norm(&values(&out)),
        _ => norm_of(&out),
    };
    stats.max_norm = stats.max_norm.max(passed);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::{CellVariant, ClampMode};
    use crate::grad::ParamVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_params(cfg: &CellConfig, seed: u64, scale: f64) -> ParamVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamVector::glorot(cfg.layout(), &mut rng);
        for v in p.values_mut() {
            *v *= scale;
        }
        p
    }

    fn run(cfg: &CellConfig, p: &ParamVector, h: &[f64], input: Option<u8>) -> Vec<f64> {
        let mut s = StepStats::default();
        step_raw(cfg, p.layout(), p.values(), h, input, &mut s)
    }

    #[test]
    fn zero_params_give_zero_state() {
        for v in CellVariant::ALL {
            let cfg = CellConfig::new(v, 4);
            let p = ParamVector::zeros(cfg.layout());
            let h0 = cfg.initial_state(0.0);
            let h1 = run(&cfg, &p, &h0, Some(1));
            if v == CellVariant::EuclideanGru {
                // r = z = 1/2, candidate tanh(0) = 0
                assert!(h1.iter().all(|x| *x == 0.0));
            } else {
                for (a, b) in h1.iter().zip(&h0) {
                    assert!((a - b).abs() < 1e-15, "{v}: {h1:?}");
                }
            }
        }
    }

    /// GRU with one hidden unit, `W`/`U` of the r and z gates zeroed and
    /// their biases pushed to tangent value `r_t`, `z_t`.
    fn gated_gru(v: CellVariant, r_t: f64, z_t: f64) -> (CellConfig, ParamVector) {
        let cfg = CellConfig::new(v, 1);
        let mut p = random_params(&cfg, 11, 1.0);
        let layout = cfg.layout();
        for (g, t) in layout.gates[..2].iter().zip([r_t, z_t]) {
            for blk in [g.w, g.u] {
                for x in &mut p.values_mut()[blk.offset..blk.offset + blk.len()] {
                    *x = 0.0;
                }
            }
            p.values_mut()[g.b.offset] = match v.geometry() {
                Geometry::Poincare => poincare::exp0(&[t], cfg.c)[0],
                _ => t,
            };
        }
        (cfg, p)
    }

    fn state(v: CellVariant, s: f64) -> Vec<f64> {
        match v.geometry() {
            Geometry::Lorentz => lorentz::from_spatial(&[s]),
            _ => vec![s],
        }
    }

    #[test]
    fn update_gate_limits_share_one_convention() {
        // z -> 0 keeps h_prev; z -> 1 (with r -> 0) gives the candidate,
        // which then no longer depends on h_prev.
        for v in [CellVariant::EuclideanGru, CellVariant::PoincareGru, CellVariant::LorentzGru] {
            let tol = if v == CellVariant::PoincareGru { 2e-2 } else { 1e-4 };
            let (a, b) = (state(v, 0.5), state(v, -0.3));
            let (cfg, p) = gated_gru(v, -12.0, -12.0);
            for h in [&a, &b] {
                let out = run(&cfg, &p, h, Some(1));
                assert!(out.iter().zip(h.iter()).all(|(x, y)| (x - y).abs() < tol), "{v}: {out:?}");
            }
            let (cfg, p) = gated_gru(v, -12.0, 12.0);
            let (ha, hb) = (run(&cfg, &p, &a, Some(1)), run(&cfg, &p, &b, Some(1)));
            assert!(ha.iter().zip(&hb).all(|(x, y)| (x - y).abs() < tol), "{v}: {ha:?} {hb:?}");
            assert!((ha[ha.len() - 1] - a[a.len() - 1]).abs() > 10.0 * tol, "{v}");
        }
    }

    #[test]
    fn euclidean_rnn_saturates() {
        let cfg = CellConfig::new(CellVariant::EuclideanRnn, 3);
        let mut p = ParamVector::zeros(cfg.layout());
        let b = cfg.layout().gates[0].b;
        for v in &mut p.values_mut()[b.offset..b.offset + 3] {
            *v = 10.0;
        }
        let h = run(&cfg, &p, &[0.1, -0.3, 0.2], Some(0));
        assert!(h.iter().all(|x| (x - 10f64.tanh()).abs() < 1e-15));
    }

    #[test]
    fn poincare_states_respect_r_max() {
        let mut cfg = CellConfig::new(CellVariant::PoincareRnn, 5);
        cfg.r_max = 0.618;
        let p = random_params(&cfg, 3, 4.0);
        let mut h = cfg.initial_state(0.0);
        let mut stats = StepStats::default();
        for i in 0..30 {
            h = step_raw(&cfg, p.layout(), p.values(), &h, Some((i % 2) as u8), &mut stats);
            assert!(norm_of(&h) <= 0.618 + 1e-15);
        }
        assert!(stats.max_norm <= 0.618 + 1e-15);
    }

    #[test]
    fn lorentz_double_clamp_bounds_result() {
        for v in [CellVariant::LorentzRnn, CellVariant::LorentzGru] {
            let mut cfg = CellConfig::new(v, 4);
            cfg.l_max = Some(2.0);
            cfg.clamp_mode = ClampMode::Double;
            let p = random_params(&cfg, 9, 5.0);
            let mut h = cfg.initial_state(0.0);
            for i in 0..20 {
                h = run(&cfg, &p, &h, Some((i % 2) as u8));
                assert!(lorentz::spatial_norm(&h) <= 2.0 + 1e-12);
                assert!((lorentz::inner(&h, &h) + 1.0).abs() < 1e-8);
            }
        }
    }
}
