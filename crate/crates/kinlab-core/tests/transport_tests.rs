// Exactness tests for the product-metric optimal transport routines: the
// assignment solver against permutation brute force, the grid solver against
// atom expansion, and the metric axioms on random instances.

use kinlab_core::model::LabelSpace;
use kinlab_core::rng::{stream_rng, uniform01, uniform_in};
use kinlab_core::transport::{
    resample_to_match, w2_1d, w2_grid, w2_product, w2_product_bruteforce, w2_to_dirac_product,
    DiscreteMeasure, WeightedAtoms,
};
use kinlab_core::grid::{Grid1D, GridDensity};
use kinlab_core::Vect;
use rand_chacha::ChaCha12Rng;

fn random_measure(rng: &mut ChaCha12Rng, n: usize, dim: usize, ls: &LabelSpace) -> DiscreteMeasure {
    let pts: Vec<(Vect, Vect)> = (0..n)
        .map(|_| {
            let x = if dim == 1 {
                Vect::scalar(uniform_in(rng, -2.0, 2.0))
            } else {
                Vect::new(&[uniform_in(rng, -2.0, 2.0), uniform_in(rng, -2.0, 2.0)])
            };
            let j = (uniform01(rng) * ls.len() as f64) as usize;
            (x, *ls.label(j.min(ls.len() - 1)))
        })
        .collect();
    let w = vec![1.0 / n as f64; n];
    DiscreteMeasure::new(pts, w).unwrap()
}

#[test]
fn assignment_solver_equals_permutation_brute_force() {
    let ls = LabelSpace::bernoulli(0.4).unwrap();
    let mut rng = stream_rng(7, 0);
    for inst in 0..200 {
        let n = 2 + (uniform01(&mut rng) * 7.0) as usize;
        let dim = 1 + (inst % 2);
        let a = random_measure(&mut rng, n, dim, &ls);
        let b = random_measure(&mut rng, n, dim, &ls);
        let fast = w2_product(&a, &b).unwrap();
        let brute = w2_product_bruteforce(&a, &b).unwrap();
        assert_eq!(
            fast.to_bits(),
            brute.to_bits(),
            "instance {inst}: {fast:.17} vs {brute:.17}"
        );
    }
}

#[test]
fn metric_axioms_on_random_triples() {
    let ls = LabelSpace::bernoulli(0.5).unwrap();
    let mut rng = stream_rng(11, 0);
    for _ in 0..1000 {
        let n = 2 + (uniform01(&mut rng) * 5.0) as usize;
        let a = random_measure(&mut rng, n, 1, &ls);
        let b = random_measure(&mut rng, n, 1, &ls);
        let c = random_measure(&mut rng, n, 1, &ls);
        let ab = w2_product(&a, &b).unwrap();
        let ba = w2_product(&b, &a).unwrap();
        let bc = w2_product(&b, &c).unwrap();
        let ac = w2_product(&a, &c).unwrap();
        assert!(ab >= 0.0);
        assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0), "symmetry violated");
        assert!(ac <= ab + bc + 1e-9, "triangle violated: {ac} > {ab} + {bc}");
        let aa = w2_product(&a, &a).unwrap();
        assert_eq!(aa, 0.0, "identity violated");
    }
}

#[test]
fn hand_checked_distances() {
    let ls = LabelSpace::bernoulli(0.5).unwrap();
    let s1 = *ls.label(0);
    let s2 = *ls.label(1);
    // Pure spatial shift, one label in play.
    let a = DiscreteMeasure::new(
        vec![(Vect::scalar(0.0), s1), (Vect::scalar(1.0), s1)],
        vec![0.5, 0.5],
    )
    .unwrap();
    let b = DiscreteMeasure::new(
        vec![(Vect::scalar(0.5), s1), (Vect::scalar(1.5), s1)],
        vec![0.5, 0.5],
    )
    .unwrap();
    assert!((w2_product(&a, &b).unwrap() - 0.5).abs() < 1e-14);
    // Pure label flip at fixed positions: every unit of mass crosses the
    // unit label gap whichever way it is routed.
    let a = DiscreteMeasure::new(
        vec![(Vect::scalar(0.0), s1), (Vect::scalar(1.0), s2)],
        vec![0.5, 0.5],
    )
    .unwrap();
    let b = DiscreteMeasure::new(
        vec![(Vect::scalar(0.0), s2), (Vect::scalar(1.0), s1)],
        vec![0.5, 0.5],
    )
    .unwrap();
    assert!((w2_product(&a, &b).unwrap() - 1.0).abs() < 1e-14);
}

/// Expands a grid density whose cell masses are multiples of `1/n` into `n`
/// uniform atoms at the cell centers.
fn expand_to_atoms(d: &GridDensity, n: usize) -> DiscreteMeasure {
    let grid = d.grid;
    let mut pts = Vec::new();
    for j in 0..d.label_count() {
        let lab = *d.labels.label(j);
        let mu = d.labels.weight(j);
        for i in 0..grid.n() {
            let mass = d.value(j, i) * grid.dx() * mu;
            let count = (mass * n as f64).round() as usize;
            for _ in 0..count {
                pts.push((Vect::scalar(grid.center(i)), lab));
            }
        }
    }
    assert_eq!(pts.len(), n, "masses must be multiples of 1/n");
    let w = vec![1.0 / n as f64; n];
    DiscreteMeasure::new(pts, w).unwrap()
}

#[test]
fn grid_solver_agrees_with_atom_expansion() {
    // Cell masses in eighths let the brute-force assignment solver provide
    // the exact reference for the weighted simplex route.
    let grid = Grid1D::new(0.0, 1.0, 8).unwrap();
    let ls = LabelSpace::bernoulli(0.5).unwrap();
    let mut rng = stream_rng(13, 0);
    for _ in 0..40 {
        let mut mk = || {
            // Distribute 8 mass units over the 16 (cell, label) slots.
            let mut units = [0usize; 16];
            for _ in 0..8 {
                let slot = (uniform01(&mut rng) * 16.0) as usize;
                units[slot.min(15)] += 1;
            }
            let dx = grid.dx();
            let vals: Vec<f64> = units
                .iter()
                .map(|&u| u as f64 / 8.0 / (dx * 0.5))
                .collect();
            GridDensity::new(grid, ls.clone(), vals, 0.0).unwrap()
        };
        let a = mk();
        let b = mk();
        let via_grid = w2_grid(&a, &b).unwrap();
        let via_atoms = w2_product_bruteforce(&expand_to_atoms(&a, 8), &expand_to_atoms(&b, 8)).unwrap();
        assert!(
            (via_grid - via_atoms).abs() <= 1e-9,
            "grid route {via_grid:.12} vs atom route {via_atoms:.12}"
        );
    }
}

#[test]
fn quantile_sweep_matches_assignment_on_uniform_atoms() {
    let mut rng = stream_rng(17, 0);
    let ls = LabelSpace::new(vec![Vect::scalar(1.0)], vec![1.0]).unwrap();
    for _ in 0..50 {
        let n = 8;
        let xs_a: Vec<f64> = (0..n).map(|_| uniform_in(&mut rng, -1.0, 1.0)).collect();
        let xs_b: Vec<f64> = (0..n).map(|_| uniform_in(&mut rng, -1.0, 1.0)).collect();
        let atoms_a = WeightedAtoms::from_samples(&xs_a).unwrap();
        let atoms_b = WeightedAtoms::from_samples(&xs_b).unwrap();
        let sweep = w2_1d(&atoms_a, &atoms_b);
        let a = DiscreteMeasure::new(
            xs_a.iter().map(|&x| (Vect::scalar(x), *ls.label(0))).collect(),
            vec![1.0 / n as f64; n],
        )
        .unwrap();
        let b = DiscreteMeasure::new(
            xs_b.iter().map(|&x| (Vect::scalar(x), *ls.label(0))).collect(),
            vec![1.0 / n as f64; n],
        )
        .unwrap();
        let assigned = w2_product(&a, &b).unwrap();
        assert!((sweep - assigned).abs() <= 1e-12 * sweep.max(1.0));
    }
}

#[test]
fn dirac_product_distance_matches_general_solver() {
    let ls = LabelSpace::bernoulli(0.5).unwrap();
    let mut rng = stream_rng(19, 0);
    for _ in 0..50 {
        let n = 8;
        let xs: Vec<Vect> = (0..n).map(|_| Vect::scalar(uniform_in(&mut rng, -1.0, 2.0))).collect();
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let x_star = Vect::scalar(uniform_in(&mut rng, 0.0, 1.0));
        let direct = w2_to_dirac_product(&xs, &labels, &ls, &x_star).unwrap();
        // Expand the product target into balanced atoms at x*.
        let source = DiscreteMeasure::from_labeled_samples(&xs, &labels, &ls).unwrap();
        let target = DiscreteMeasure::new(
            (0..n).map(|i| (x_star, *ls.label(i % 2))).collect(),
            vec![1.0 / n as f64; n],
        )
        .unwrap();
        let general = w2_product(&source, &target).unwrap();
        assert!(
            (direct - general).abs() <= 1e-12 * direct.max(1.0),
            "{direct} vs {general}"
        );
    }
}

#[test]
fn resampling_preserves_mass_and_is_deterministic() {
    let ls = LabelSpace::bernoulli(0.3).unwrap();
    let mut rng = stream_rng(23, 0);
    let m = random_measure(&mut rng, 40, 1, &ls);
    let r1 = resample_to_match(&m, 16).unwrap();
    let r2 = resample_to_match(&m, 16).unwrap();
    assert_eq!(r1.len(), 16);
    let d = w2_product(&r1, &r2).unwrap();
    assert_eq!(d, 0.0);
    // Resampling moves each atom by at most the quantile spacing.
    let coarse = resample_to_match(&m, 512).unwrap();
    let fine = resample_to_match(&m, 1024).unwrap();
    let gap = w2_product(
        &resample_to_match(&coarse, 256).unwrap(),
        &resample_to_match(&fine, 256).unwrap(),
    )
    .unwrap();
    assert!(gap <= 0.2, "quantile resampling drifted: {gap}");
}

#[test]
fn oversized_instances_are_rejected_with_guidance() {
    let ls = LabelSpace::bernoulli(0.5).unwrap();
    let n = 4097;
    let pts: Vec<(Vect, Vect)> = (0..n)
        .map(|i| (Vect::scalar(i as f64 / n as f64), *ls.label(i % 2)))
        .collect();
    let m = DiscreteMeasure::new(pts, vec![1.0 / n as f64; n]).unwrap();
    let err = w2_product(&m, &m).unwrap_err();
    let msg = format!("{err}");
    assert!(msg.contains("4096"), "size error should name the cap: {msg}");
}
