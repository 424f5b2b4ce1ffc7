//! Self-check suite: engine equivalence on mixed random clouds plus the
//! structural invariants of the graph stack and the matcher. One line per
//! check; any failure is an internal-invariant violation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topodr_core::cascade;
use topodr_core::error::{CoreError, Result};
use topodr_core::planar::{planar_rips_persistence, PlanarOptions};
use topodr_core::reduction::{analyze, rips_persistence, RipsOptions};
use topodr_core::wasserstein::{wasserstein, WassersteinConfig};
use topodr_core::PointCloud;

pub struct VerifyReport {
    pub passed: usize,
    pub failed: usize,
}

pub fn run(quick: bool, out: &mut impl std::io::Write) -> Result<VerifyReport> {
    let mut passed = 0usize;
    let mut failed = 0usize;
    let clouds = if quick { 60 } else { 300 };
    let max_n = if quick { 60 } else { 120 };

    let mut check = |name: &str, ok: std::result::Result<(), String>, out: &mut dyn std::io::Write| {
        match ok {
            Ok(()) => {
                let _ = writeln!(out, "PASS {name}");
                passed += 1;
            }
            Err(msg) => {
                let _ = writeln!(out, "FAIL {name}: {msg}");
                failed += 1;
            }
        }
    };

    check("engine equivalence on mixed clouds", equivalence_sweep(clouds, max_n), out);
    check("graph inclusion chain and face counts", graph_invariants(50, max_n), out);
    check("dimension-0 cascade skeleton equals MST", gcs0_check(30), out);
    check("killing-edge window bounds", window_check(20, max_n), out);
    check("auction tracks the exact matcher", auction_check(60), out);

    if failed > 0 {
        return Err(CoreError::internal(format!("{failed} verification check(s) failed")));
    }
    Ok(VerifyReport { passed, failed })
}

pub fn mixed_cloud(rng: &mut ChaCha8Rng, flavor: usize, n: usize) -> PointCloud {
    let pts: Vec<Vec<f64>> = match flavor % 4 {
        0 => (0..n).map(|_| vec![rng.gen(), rng.gen()]).collect(),
        1 => (0..n)
            .map(|_| {
                let t = rng.gen::<f64>() * std::f64::consts::TAU;
                let r = 1.0 + 0.1 * rng.gen::<f64>();
                vec![r * t.cos(), r * t.sin()]
            })
            .collect(),
        2 => {
            let c = (rng.gen::<f64>() * 5.0, rng.gen::<f64>() * 5.0);
            (0..n)
                .map(|k| {
                    let base = if k % 2 == 0 { (0.0, 0.0) } else { c };
                    vec![base.0 + rng.gen::<f64>(), base.1 + rng.gen::<f64>()]
                })
                .collect()
        }
        _ => {
            let side = (n as f64).sqrt().ceil() as usize;
            (0..n)
                .map(|k| {
                    vec![
                        (k / side) as f64 + 0.05 * rng.gen::<f64>(),
                        (k % side) as f64 + 0.05 * rng.gen::<f64>(),
                    ]
                })
                .collect()
        }
    };
    PointCloud::new(pts).expect("mixed cloud construction")
}

fn equivalence_sweep(clouds: usize, max_n: usize) -> std::result::Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..clouds {
        let n = rng.gen_range(4..=max_n);
        let cloud = mixed_cloud(&mut rng, trial, n);
        let planar = planar_rips_persistence(&cloud, &PlanarOptions::default())
            .map_err(|e| format!("planar engine failed (trial {trial}): {e}"))?;
        let oracle = rips_persistence(&cloud, 1, &RipsOptions::default())
            .map_err(|e| format!("reduction engine failed (trial {trial}): {e}"))?;
        if planar.dgm0 != oracle[0] {
            return Err(format!("dimension-0 mismatch on trial {trial} (n={n})"));
        }
        if planar.dgm1 != oracle[1] {
            return Err(format!("dimension-1 mismatch on trial {trial} (n={n})"));
        }
    }
    Ok(())
}

fn graph_invariants(clouds: usize, max_n: usize) -> std::result::Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for trial in 0..clouds {
        let n = rng.gen_range(4..=max_n);
        let cloud = mixed_cloud(&mut rng, trial, n);
        let res = planar_rips_persistence(&cloud, &PlanarOptions::default())
            .map_err(|e| e.to_string())?;
        let g = &res.graphs;
        for e in 0..g.del.num_edges() {
            if g.in_mst[e] && !g.in_rng[e] {
                return Err(format!("MST edge outside RNG on trial {trial}"));
            }
            if g.in_rng[e] && !g.in_ug[e] {
                return Err(format!("RNG edge outside UG on trial {trial}"));
            }
        }
        if g.polygons.len() != g.rng_nonmst_ids().len() {
            return Err(format!(
                "face count {} != cycle-creating edge count {} on trial {trial}",
                g.polygons.len(),
                g.rng_nonmst_ids().len()
            ));
        }
        if res.positive1.len() != g.polygons.len() {
            return Err(format!("positive pair count mismatch on trial {trial}"));
        }
    }
    Ok(())
}

fn gcs0_check(clouds: usize) -> std::result::Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..clouds {
        let n = rng.gen_range(2..50);
        let dim = rng.gen_range(1..4);
        let pts: Vec<Vec<f64>> =
            (0..n).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect();
        let cloud = PointCloud::new(pts).map_err(|e| e.to_string())?;
        let a = analyze(&cloud, 0, &RipsOptions::default()).map_err(|e| e.to_string())?;
        let gcs0 = cascade::skeleton_gcs(&a, 0).map_err(|e| e.to_string())?;
        let mut mst = a.mst_edges.clone();
        mst.sort_unstable();
        if gcs0 != mst {
            return Err(format!("dimension-0 skeleton differs from MST on trial {trial}"));
        }
    }
    Ok(())
}

fn window_check(clouds: usize, max_n: usize) -> std::result::Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(111);
    let lo = 3.0_f64.sqrt() / 2.0;
    for trial in 0..clouds {
        let n = rng.gen_range(10..=max_n);
        let cloud = mixed_cloud(&mut rng, trial, n);
        let res = planar_rips_persistence(&cloud, &PlanarOptions::default())
            .map_err(|e| e.to_string())?;
        for (poly, mml) in res.graphs.polygons.iter().zip(&res.mml_edges) {
            if mml.len < lo * poly.deleted.len || *mml > poly.deleted {
                return Err(format!(
                    "killing edge {:.6} outside window [{:.6}, {:.6}] on trial {trial}",
                    mml.len,
                    lo * poly.deleted.len,
                    poly.deleted.len
                ));
            }
        }
    }
    Ok(())
}

fn auction_check(pairs: usize) -> std::result::Result<(), String> {
    use topodr_core::diagram::{PersistenceDiagram, PersistencePair};
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let dgm = |rng: &mut ChaCha8Rng, n: usize| {
        PersistenceDiagram::new(
            1,
            (0..n)
                .map(|_| {
                    let b = rng.gen::<f64>() * 2.0;
                    PersistencePair {
                        birth: b,
                        death: b + rng.gen::<f64>(),
                        birth_simplex: vec![0, 1],
                        death_simplex: None,
                    }
                })
                .collect(),
        )
    };
    for trial in 0..pairs {
        let (n1, n2) = (rng.gen_range(0..10), rng.gen_range(0..10));
        let d1 = dgm(&mut rng, n1);
        let d2 = dgm(&mut rng, n2);
        let (w_auc, _) =
            wasserstein(&d1, &d2, &WassersteinConfig::default()).map_err(|e| e.to_string())?;
        let (w_ex, _) =
            wasserstein(&d1, &d2, &WassersteinConfig::exact()).map_err(|e| e.to_string())?;
        let rel = if w_ex > 0.0 { (w_auc - w_ex).abs() / w_ex } else { w_auc };
        if rel > 1e-2 {
            return Err(format!("auction error {rel:.4} on trial {trial}"));
        }
    }
    Ok(())
}
