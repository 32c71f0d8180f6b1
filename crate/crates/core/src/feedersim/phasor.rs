//! Steady-state phasor arithmetic of the two-terminal feeder: load flow,
//! fault component, infeed split and inverter current limiting.

use std::f64::consts::PI;

use num_complex::Complex64 as C;

use crate::label::FaultLabel;

use super::config::{FaultSpec, Impedance, ScenarioConfig, SourceMode};

fn z(i: Impedance) -> C {
    C::new(i.r, i.x)
}

/// Phase-to-neutral voltages, a at 0°, b at −120°, c at +120°.
pub fn phase_voltages(cfg: &ScenarioConfig) -> [C; 3] {
    let v = cfg.feeder.v_ll_kv * 1e3 / 3f64.sqrt();
    [0.0, -2.0 * PI / 3.0, 2.0 * PI / 3.0].map(|a| C::from_polar(v, a))
}

/// Balanced lagging load currents (rms phasors) scaled by `factor`.
pub fn load_currents(cfg: &ScenarioConfig, factor: f64) -> [C; 3] {
    let lag = cfg.feeder.load_pf.acos();
    let mag = cfg.load_amps_rms * factor;
    [0.0, -2.0 * PI / 3.0, 2.0 * PI / 3.0].map(|a| C::from_polar(mag, a - lag))
}

/// Current drawn by the fault through the Thevenin impedance `z_th`.
///
/// Grounded faults connect every faulted phase to ground through `r_f`.
/// Ungrounded faults form a floating star: `r_f` between two phases splits
/// into `r_f/2` per leg, a three-phase fault puts `r_f` in every leg.
pub fn fault_injection(v: &[C; 3], label: FaultLabel, r_f: Option<f64>, z_th: C) -> [C; 3] {
    let phases = label.phases();
    let r = r_f.unwrap_or(0.0);
    let mut out = [C::new(0.0, 0.0); 3];
    if label.is_grounded() {
        for p in 0..3 {
            if phases[p] {
                out[p] = v[p] / (z_th + r);
            }
        }
        return out;
    }
    let n_faulted = phases.iter().filter(|&&f| f).count();
    if n_faulted < 2 {
        return out;
    }
    let leg = if n_faulted == 2 { r / 2.0 } else { r };
    let v_n: C = (0..3).filter(|&p| phases[p]).map(|p| v[p]).sum::<C>() / n_faulted as f64;
    for p in 0..3 {
        if phases[p] {
            out[p] = (v[p] - v_n) / (z_th + leg);
        }
    }
    out
}

/// Largest `s` in [0, 1] with `|base_p + s·delta_p| <= cap` on every phase.
pub fn limit_scale(base: &[C; 3], delta: &[C; 3], cap: f64) -> f64 {
    let mut s: f64 = 1.0;
    for p in 0..3 {
        let (a, b) = (base[p], delta[p]);
        if (a + b).norm() <= cap {
            continue;
        }
        let bb = b.norm_sqr();
        let ab = (a * b.conj()).re;
        let disc = ab * ab - bb * (a.norm_sqr() - cap * cap);
        let root = if disc > 0.0 {
            (-ab + disc.sqrt()) / bb
        } else {
            0.0
        };
        s = s.min(root.clamp(0.0, 1.0));
    }
    s
}

/// Post-fault terminal current phasors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultedCurrents {
    pub sending: [C; 3],
    pub receiving: [C; 3],
}

fn rotate(x: [C; 3], deg: f64) -> [C; 3] {
    let r = C::from_polar(1.0, deg.to_radians());
    x.map(|v| v * r)
}

fn add_scaled(base: &[C; 3], delta: &[C; 3], s: f64) -> [C; 3] {
    [0, 1, 2].map(|p| base[p] + delta[p] * s)
}

/// Terminal currents once the fault is established, given the load current
/// flowing at inception.
pub fn faulted_currents(cfg: &ScenarioConfig, fault: &FaultSpec, load: &[C; 3]) -> FaultedCurrents {
    let f = &cfg.feeder;
    let v = phase_voltages(cfg);
    let z_src = match cfg.source_mode {
        SourceMode::Grid => z(f.grid_source),
        SourceMode::Islanded => z(f.islanded_source),
    };
    let z_line = z(f.line);
    let cap = cfg.ibr_limit_pu * load[0].norm();
    let islanded = cfg.source_mode == SourceMode::Islanded;

    if !fault.internal {
        // fed from the sending side only; the same current passes both terminals
        let z_path = z_src + z_line * (1.0 + fault.location_frac);
        let through = rotate(
            fault_injection(&v, fault.label, fault.r_f, z_path),
            cfg.phase_jump_deg,
        );
        let s = if islanded {
            limit_scale(load, &through, cap)
        } else {
            1.0
        };
        let i = add_scaled(load, &through, s);
        return FaultedCurrents {
            sending: i,
            receiving: i,
        };
    }

    let z_s = z_src + z_line * fault.location_frac;
    let z_r = z(f.remote_source) + z_line * (1.0 - fault.location_frac);
    let z_th = z_s * z_r / (z_s + z_r);
    let share_r = z_s / (z_s + z_r);
    let total = fault_injection(&v, fault.label, fault.r_f, z_th);
    // the remote converter sits behind a delta winding: it feeds only the
    // ungrounded part of the fault, so zero sequence returns via the sending end
    let remote_view = if fault.label.is_grounded() {
        fault.label.ground_sibling()
    } else {
        Some(fault.label)
    };
    let from_r = match remote_view {
        Some(l) => fault_injection(&v, l, fault.r_f, z_th).map(|d| d * share_r),
        None => [C::new(0.0, 0.0); 3],
    };
    let c_s = rotate([0, 1, 2].map(|p| total[p] - from_r[p]), cfg.phase_jump_deg);
    let c_r = rotate(from_r.map(|d| -d), cfg.phase_jump_deg);
    let s_s = if islanded {
        limit_scale(load, &c_s, cap)
    } else {
        1.0
    };
    let s_r = limit_scale(load, &c_r, cfg.remote_ibr_limit_pu * load[0].norm());
    FaultedCurrents {
        sending: add_scaled(load, &c_s, s_s),
        receiving: add_scaled(load, &c_r, s_r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(label: FaultLabel, r_f: Option<f64>, internal: bool) -> FaultSpec {
        FaultSpec {
            t_f: 0.1,
            label,
            r_f,
            location_frac: 0.5,
            internal,
        }
    }

    #[test]
    fn voltages_and_load_are_balanced() {
        let cfg = ScenarioConfig::default();
        let v: C = phase_voltages(&cfg).iter().sum();
        let i: C = load_currents(&cfg, 1.3).iter().sum();
        assert!(v.norm() < 1e-9 && i.norm() < 1e-9);
        assert!((load_currents(&cfg, 1.0)[1].norm() - 60.0).abs() < 1e-12);
    }

    #[test]
    fn bolted_grid_fault_is_about_ten_pu() {
        let cfg = ScenarioConfig::default();
        let v = phase_voltages(&cfg);
        let i = fault_injection(
            &v,
            FaultLabel::Ag,
            Some(0.1),
            C::new(cfg.feeder.grid_source.r, cfg.feeder.grid_source.x),
        );
        let pu = i[0].norm() / cfg.load_amps_rms;
        assert!((8.0..12.0).contains(&pu), "{pu}");
    }

    #[test]
    fn ungrounded_injection_has_no_zero_sequence() {
        let cfg = ScenarioConfig::default();
        let v = phase_voltages(&cfg);
        for label in [
            FaultLabel::Ab,
            FaultLabel::Ac,
            FaultLabel::Bc,
            FaultLabel::Abc,
        ] {
            let i = fault_injection(&v, label, Some(50.0), C::new(3.0, 12.0));
            let sum: C = i.iter().sum();
            assert!(sum.norm() < 1e-9 * i.iter().map(|x| x.norm()).fold(0.0, f64::max));
        }
        let i = fault_injection(&v, FaultLabel::Ag, Some(50.0), C::new(3.0, 12.0));
        assert!(i.iter().sum::<C>().norm() > 1.0);
    }

    #[test]
    fn line_to_line_matches_closed_form() {
        let cfg = ScenarioConfig::default();
        let v = phase_voltages(&cfg);
        let zt = C::new(2.0, 9.0);
        let i = fault_injection(&v, FaultLabel::Bc, Some(10.0), zt);
        let want = (v[1] - v[2]) / (zt * 2.0 + 10.0);
        assert!((i[1] - want).norm() < 1e-9);
        assert!((i[2] + want).norm() < 1e-9);
        assert_eq!(i[0], C::new(0.0, 0.0));
    }

    #[test]
    fn limit_scale_caps_magnitude() {
        let base = [C::new(60.0, 0.0); 3];
        let delta = [C::new(500.0, 200.0), C::new(0.0, 0.0), C::new(-30.0, 0.0)];
        let s = limit_scale(&base, &delta, 90.0);
        assert!(s > 0.0 && s < 1.0);
        for p in 0..3 {
            assert!((base[p] + delta[p] * s).norm() <= 90.0 + 1e-9);
        }
        assert!(((base[0] + delta[0] * s).norm() - 90.0).abs() < 1e-9);
        assert_eq!(limit_scale(&base, &[C::new(1.0, 0.0); 3], 90.0), 1.0);
    }

    #[test]
    fn external_fault_keeps_terminals_equal() {
        let cfg = ScenarioConfig::default();
        let load = load_currents(&cfg, 1.0);
        let out = faulted_currents(&cfg, &spec(FaultLabel::Abg, Some(0.1), false), &load);
        assert_eq!(out.sending, out.receiving);
        assert!(out.sending[0].norm() > 3.0 * load[0].norm());
    }

    #[test]
    fn zero_sequence_returns_through_the_sending_end() {
        let cfg = ScenarioConfig::default();
        let load = load_currents(&cfg, 1.0);
        for label in [FaultLabel::Ag, FaultLabel::Bcg] {
            let out = faulted_currents(&cfg, &spec(label, Some(10.0), true), &load);
            assert!(out.receiving.iter().sum::<C>().norm() < 1e-9);
            assert!(out.sending.iter().sum::<C>().norm() > 100.0);
        }
        let ag = faulted_currents(&cfg, &spec(FaultLabel::Ag, Some(10.0), true), &load);
        assert_eq!(ag.receiving, load);
        // sound phases keep the load current at both ends
        assert!((ag.sending[1] - load[1]).norm() < 1e-9);
    }

    #[test]
    fn islanded_terminals_respect_the_limit() {
        let cfg = ScenarioConfig {
            source_mode: SourceMode::Islanded,
            ..ScenarioConfig::default()
        };
        let load = load_currents(&cfg, 1.0);
        for label in FaultLabel::CLASSES {
            let out = faulted_currents(&cfg, &spec(label, Some(0.1), true), &load);
            for p in 0..3 {
                assert!(out.sending[p].norm() <= 1.5 * 60.0 + 1e-9);
                assert!(out.receiving[p].norm() <= cfg.remote_ibr_limit_pu * 60.0 + 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn injection_shrinks_with_resistance(
            idx in 0usize..10,
            r1 in 0.1f64..250.0,
            extra in 0.0f64..250.0,
            zr in 0.1f64..20.0,
            zx in 0.1f64..60.0,
        ) {
            let cfg = ScenarioConfig::default();
            let v = phase_voltages(&cfg);
            let label = FaultLabel::CLASSES[idx];
            let r2 = (r1 + extra).min(250.0);
            let zt = C::new(zr, zx);
            let lo = fault_injection(&v, label, Some(r1), zt);
            let hi = fault_injection(&v, label, Some(r2), zt);
            for p in 0..3 {
                prop_assert!(hi[p].norm() <= lo[p].norm() * (1.0 + 1e-12));
            }
        }

        #[test]
        fn terminals_never_exceed_their_caps(
            idx in 0usize..10,
            r in 0.1f64..250.0,
            loc in 0.05f64..0.95,
            load in 20.0f64..120.0,
        ) {
            let cfg = ScenarioConfig {
                source_mode: SourceMode::Islanded,
                load_amps_rms: load,
                ..ScenarioConfig::default()
            };
            let base = load_currents(&cfg, 1.0);
            let f = FaultSpec { t_f: 0.1, label: FaultLabel::CLASSES[idx], r_f: Some(r), location_frac: loc, internal: true };
            let out = faulted_currents(&cfg, &f, &base);
            for p in 0..3 {
                prop_assert!(out.sending[p].norm() <= cfg.ibr_limit_pu * load * (1.0 + 1e-9));
                prop_assert!(out.receiving[p].norm() <= cfg.remote_ibr_limit_pu * load * (1.0 + 1e-9));
            }
        }
    }
}
