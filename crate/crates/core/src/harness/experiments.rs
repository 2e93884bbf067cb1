//! One runner per subcommand.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::*;
use super::{config_error, Cell, Context, HarnessError, Outcome, Series};
use crate::classical::{classify_set_level, set_correlation, ArcSet, CellSet, MapSpec, MeasurableSet};
use crate::dephasing::{
    amplitude_series, cesaro_average_with_plateau, cesaro_rate, quasi_continuous_interference, SampledProfile,
    SpectrumSpec, DEGENERACY_GAP,
};
use crate::hierarchy::{
    cesaro_residual_series, classify_quantum, equilibrium_method_distance, estimate_equilibrium, mixing_reduction_gap, EquilibriumMethod,
    KolmogorovFamily, Trajectory,
};
use crate::hilbert::{random, CVector, DensityState, Observable, Unitary, C64};
use crate::rotator::{cesaro_limit_check_with, regime_report_for, rotator_trajectory, RotatorSpec};
use crate::verdict::{HierarchyVerdict, Level};
use crate::wigner::{
    inverse_weyl, normalized_correlation, pairing_check, product_symbol_discrepancy, quantize_indicator,
    wigner_transform,
};

fn verdict_metrics(out: &mut Outcome, v: &HierarchyVerdict) {
    for l in Level::ALL {
        if let Some(r) = v.get(l) {
            out.metric(format!("{}_residual", l.name()), r.residual);
        }
    }
    out.metric("inclusions_hold", if v.inclusions_hold() { 1.0 } else { 0.0 });
}

fn arc_sets(defs: &[SetDef]) -> Result<Vec<ArcSet>, HarnessError> {
    if defs.is_empty() {
        return Ok(vec![
            ArcSet::wrapped(0.0, 0.5).context("set 0")?,
            ArcSet::wrapped(0.25, 0.5).context("set 1")?,
            ArcSet::wrapped(0.1, 0.3).context("set 2")?,
        ]);
    }
    defs.iter()
        .enumerate()
        .map(|(i, d)| match d {
            SetDef::Arc { start, length } => ArcSet::wrapped(*start, *length).context(format!("sets[{i}]")),
            _ => Err(config_error(&format!("sets[{i}]"), "rotations act on `arc` sets only")),
        })
        .collect()
}

fn cell_sets(map: &MapSpec, k: u32, defs: &[SetDef]) -> Result<Vec<CellSet>, HarnessError> {
    let base = match map {
        MapSpec::BernoulliShift { p } => *p,
        _ => 2,
    };
    if defs.is_empty() {
        let sets = match map {
            MapSpec::Cat => {
                let side = 1u64 << k;
                let (lo, hi) = (side / 4, 3 * side / 4);
                vec![
                    CellSet::from_predicate(2, k, |ix, _| ix < side / 2),
                    CellSet::from_predicate(2, k, |_, iy| iy < side / 2),
                    CellSet::from_predicate(2, k, |ix, iy| (lo..hi).contains(&ix) && (lo..hi).contains(&iy)),
                ]
            }
            _ => vec![
                CellSet::cylinder(base, &[1, 0, 1], true),
                CellSet::cylinder(base, &[1], false),
                CellSet::cylinder(base, &[0, 1], false),
            ],
        };
        return sets
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.context(format!("default set {i}")))
            .collect();
    }
    defs.iter()
        .enumerate()
        .map(|(i, d)| {
            let at = format!("sets[{i}]");
            match d {
                SetDef::Arc { .. } => Err(config_error(&at, "arc sets need a rotation")),
                SetDef::Cylinder { digits, horizontal } => CellSet::cylinder(base, digits, *horizontal).context(at),
                SetDef::Rect { x, y } => {
                    let side = (base as u64).pow(k) as f64;
                    let inside = |c: u64, r: [f64; 2]| {
                        let centre = (c as f64 + 0.5) / side;
                        centre >= r[0] && centre < r[1]
                    };
                    CellSet::from_predicate(base, k, |ix, iy| inside(ix, *x) && inside(iy, *y)).context(at)
                }
                SetDef::Cells { hex } => CellSet::from_hex(base, k, hex).context(at),
            }
        })
        .collect()
}

fn correlations<S: MeasurableSet>(map: &MapSpec, sets: &[S], n_max: u64) -> Result<Series, HarnessError> {
    let mut s = Series::new("correlations", &["set", "n", "correlation"]);
    for (i, b) in sets.iter().enumerate().skip(1) {
        for n in 0..=n_max {
            let c = set_correlation(map, &sets[0], b, n as i64).context("correlation")?;
            s.push(vec![i.into(), (n as usize).into(), c.into()]);
        }
    }
    Ok(s)
}

pub(crate) fn classify_map(cfg: &ClassifyMapConfig) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::default();
    let verdict = match &cfg.map {
        MapSpec::Rotation { .. } => {
            let sets = arc_sets(&cfg.sets)?;
            out.series.push(correlations(&cfg.map, &sets, cfg.params.n_mix)?);
            classify_set_level(&cfg.map, &sets, &cfg.params)
        }
        map => {
            let sets = cell_sets(map, cfg.resolution, &cfg.sets)?;
            out.series.push(correlations(map, &sets, cfg.params.n_mix)?);
            classify_set_level(map, &sets, &cfg.params)
        }
    }
    .context("classify-map")?;
    verdict_metrics(&mut out, &verdict);
    out.verdicts.push(verdict);
    Ok(out)
}

fn expectations(traj: &Trajectory, names: &[String], obs: &[Observable], n_max: usize) -> Result<Series, HarnessError> {
    let mut header = vec!["n"];
    header.extend(names.iter().map(String::as_str));
    let mut s = Series::new("expectations", &header);
    let values = traj.expectation_series(obs, n_max).context("expectation series")?;
    for n in 0..=n_max {
        let mut row: Vec<Cell> = vec![n.into()];
        row.extend(values.iter().map(|v| Cell::Float(v[n])));
        s.push(row);
    }
    Ok(s)
}

fn cesaro_table(
    traj: &Trajectory,
    eq: &crate::hierarchy::EquilibriumState,
    names: &[String],
    obs: &[Observable],
    n_max: usize,
) -> Result<Series, HarnessError> {
    let mut header = vec!["horizon"];
    header.extend(names.iter().map(String::as_str));
    let mut s = Series::new("cesaro", &header);
    let res = cesaro_residual_series(traj, eq, obs, n_max).context("cesaro residuals")?;
    for n in 0..n_max {
        let mut row: Vec<Cell> = vec![(n + 1).into()];
        row.extend(res.iter().map(|r| Cell::Float(r[n])));
        s.push(row);
    }
    Ok(s)
}

fn random_families(
    rng: &mut ChaCha8Rng,
    obs: &[Observable],
    per_observable: usize,
    length: usize,
    max_offset: u64,
) -> Result<Vec<KolmogorovFamily>, HarnessError> {
    let mut families = Vec::new();
    for o in obs {
        for _ in 0..per_observable {
            families.push(KolmogorovFamily::random(rng, o, length, max_offset).context("kolmogorov family")?);
        }
    }
    Ok(families)
}

pub(crate) fn qeh_test(cfg: &QehTestConfig, rng: &mut ChaCha8Rng) -> Result<Outcome, HarnessError> {
    let d = cfg.dim;
    if d == 0 {
        return Err(config_error("dim", "must be positive"));
    }
    let rho = match cfg.initial {
        InitialDef::RandomPure => random::pure(rng, d),
        InitialDef::RandomMixed => random::density(rng, d),
        InitialDef::Basis { index } => DensityState::basis(d, index).context("initial")?,
    };
    let traj = match &cfg.step {
        StepDef::Random => Trajectory::new(rho, random::unitary(rng, d)),
        StepDef::Phases { phases } => {
            if phases.len() != d {
                return Err(config_error("step.phases", format!("expected {d} phases, got {}", phases.len())));
            }
            Trajectory::new(rho, Unitary::from_phases(phases))
        }
        StepDef::Rotator { lambda, tau, hbar_eff } => {
            let spec = RotatorSpec {
                lambda: *lambda,
                tau: *tau,
                hbar_eff: *hbar_eff,
                n: d,
            };
            rotator_trajectory(&spec, rho)
        }
    }
    .context("trajectory")?;
    let obs: Vec<Observable> = (0..cfg.observables).map(|_| random::hermitian(rng, d)).collect();
    let names: Vec<String> = (0..obs.len()).map(|i| format!("obs{i}")).collect();
    let families = random_families(rng, &obs, cfg.families, cfg.family_length, cfg.max_offset)?;
    let eq = estimate_equilibrium(&traj, cfg.equilibrium).context("equilibrium")?;
    let verdict = classify_quantum(&traj, &eq, &obs, &families, &cfg.params).context("classify")?;

    let mut out = Outcome::default();
    verdict_metrics(&mut out, &verdict);
    out.metric("equilibrium_residual", eq.residual);
    out.metric(
        "mixing_reduction_gap",
        mixing_reduction_gap(&traj, &eq, &obs, cfg.params.n_mix).context("mixing reduction")?,
    );
    out.metric(
        "equilibrium_method_distance",
        equilibrium_method_distance(&traj, cfg.params.n_cesaro).context("equilibrium")?,
    );
    out.series.push(expectations(&traj, &names, &obs, cfg.params.n_mix)?);
    out.series.push(cesaro_table(&traj, &eq, &names, &obs, cfg.params.n_cesaro)?);
    out.verdicts.push(verdict);
    Ok(out)
}

fn rotator_initial(spec: &RotatorSpec, init: &RotatorInitial) -> Result<DensityState, HarnessError> {
    let index = |n: i64| {
        spec.index_of(n)
            .ok_or_else(|| config_error("initial", format!("momentum {n} outside the basis")))
    };
    match init {
        RotatorInitial::Momentum { n } => {
            DensityState::pure(&spec.momentum_state(*n).context("initial")?).context("initial")
        }
        RotatorInitial::Superposition { ns } => {
            let mut psi = CVector::zeros(spec.n);
            for &n in ns {
                psi[index(n)?] += C64::from(1.0);
            }
            DensityState::pure(&psi).context("initial")
        }
        RotatorInitial::Mixture { ns } => {
            if ns.is_empty() {
                return Err(config_error("initial.ns", "empty mixture"));
            }
            let mut p = vec![0.0; spec.n];
            for &n in ns {
                p[index(n)?] += 1.0 / ns.len() as f64;
            }
            DensityState::diagonal(&p).context("initial")
        }
    }
}

pub(crate) fn kicked_rotator(cfg: &KickedRotatorConfig, rng: &mut ChaCha8Rng) -> Result<Outcome, HarnessError> {
    let spec = &cfg.spec;
    spec.validate().context("spec")?;
    let h = spec.index_of(0).expect("zero momentum is in every basis");
    let w = usize::try_from(cfg.window)
        .ok()
        .filter(|&w| w <= h)
        .ok_or_else(|| config_error("window", format!("must lie in 0..={h}")))?;
    let traj = rotator_trajectory(spec, rotator_initial(spec, &cfg.initial)?).context("trajectory")?;
    let eq = estimate_equilibrium(&traj, EquilibriumMethod::EigenbasisDiagonal).context("equilibrium")?;
    let obs = vec![
        Observable::coherence(spec.n, h, h + 1),
        Observable::projector(spec.n, h - w..=h + w),
        Observable::projector(spec.n, [h]),
    ];
    let names: Vec<String> = ["coherence_0_1", "window", "p0"].map(String::from).to_vec();
    let families = random_families(rng, &obs, cfg.families, cfg.family_length, cfg.max_offset)?;
    let report = regime_report_for(spec, &traj, &eq, &obs, &families, &cfg.horizons).context("regime")?;

    let mut out = Outcome::default();
    verdict_metrics(&mut out, &report.verdict);
    out.metric("l_s", report.localization.l_s);
    out.metric("fit_r2", report.localization.fit_r2);
    out.metric("decoherence_time", report.decoherence_time);
    out.metric("residual_after_td", report.residual_after_td);
    out.metric("equilibrium_residual", eq.residual);
    if report.localization.truncation_flagged {
        out.notes.push("localization length exceeds N/8".into());
    }
    for (name, o) in names.iter().zip(&obs) {
        let c = cesaro_limit_check_with(&traj, &eq, o, cfg.cesaro_horizon).context("cesaro check")?;
        out.metric(format!("cesaro_residual.{name}"), c.residual);
        for (n, r) in &c.rates {
            out.metric(format!("cesaro_rate.{name}.{n}"), *r);
        }
        out.metric("min_phase_gap", c.min_phase_gap);
        out.metric("degenerate_clusters", c.degenerate_clusters as f64);
        out.metric("cluster_coherence", c.cluster_coherence);
    }

    let mut m = Series::new("momentum", &["n", "probability"]);
    for (n, p) in report.localization.momenta.iter().zip(&report.localization.probabilities) {
        m.push(vec![(*n).into(), (*p).into()]);
    }
    out.series.push(cesaro_table(&traj, &eq, &names, &obs, cfg.cesaro_horizon)?);
    out.series.push(m);
    out.series.push(expectations(&traj, &names, &obs, cfg.series_kicks)?);
    out.verdicts.push(report.verdict);
    Ok(out)
}

fn spectrum(cfg: &DephasingConfig, rng: &mut ChaCha8Rng) -> Result<SpectrumSpec, HarnessError> {
    let spec = match &cfg.spectrum {
        SpectrumDef::Random { levels, scale } => {
            SpectrumSpec::new((0..*levels).map(|_| scale * rng.random::<f64>()).collect())
        }
        SpectrumDef::Energies { energies } => SpectrumSpec::new(energies.clone()),
        SpectrumDef::File { path } => {
            let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
                path: path.clone(),
                source,
            })?;
            SpectrumSpec::parse(&text)
        }
    }
    .context("spectrum")?;
    if !cfg.inject_degeneracy {
        return Ok(spec);
    }
    let mut e = spec.energies().to_vec();
    if e.len() < 2 {
        return Err(config_error("inject_degeneracy", "needs at least two levels"));
    }
    e[1] = e[0];
    SpectrumSpec::new(e).context("spectrum")
}

pub(crate) fn dephasing(cfg: &DephasingConfig, rng: &mut ChaCha8Rng) -> Result<Outcome, HarnessError> {
    let spec = spectrum(cfg, rng)?;
    let d = spec.len();
    let rho = random::pure(rng, d);
    let projector = Observable::new(random::pure(rng, d).into_matrix()).context("projector")?;
    let split = amplitude_series(&spec, &rho, &projector, &[]).context("amplitude split")?;
    let mut out = Outcome::default();
    out.metric("levels", d as f64);
    out.metric("p_diag", split.p_diag);
    out.metric("min_gap", spec.min_gap());

    let horizons: Vec<f64> = if cfg.horizons.is_empty() {
        (0..=24).map(|e| f64::from(1u32 << e)).collect()
    } else {
        cfg.horizons.clone()
    };
    let mut s = Series::new("cesaro", &["horizon", "average", "residual", "bound", "plateau"]);
    let mut last = None;
    for &t in &horizons {
        let a = cesaro_average_with_plateau(&split, t).context(format!("horizon {t}"))?;
        s.push(vec![t.into(), a.average.into(), a.residual.into(), a.bound.into(), a.plateau.into()]);
        last = Some(a);
    }
    out.series.push(s);
    if let Some(a) = last {
        out.metric("final_residual", a.residual);
        out.metric("final_bound", a.bound);
        out.metric("plateau", a.plateau);
        if a.flagged() {
            out.notes.push(format!(
                "{} degenerate pair(s) contribute a constant plateau {:.6e}",
                a.degenerate_pairs.len(),
                a.plateau
            ));
        }
    }

    let slowest = split
        .terms
        .iter()
        .map(|t| t.delta.abs())
        .filter(|&x| x >= DEGENERACY_GAP)
        .fold(f64::INFINITY, f64::min);
    let rate_horizon = cfg
        .rate_horizon
        .unwrap_or(200.0 * std::f64::consts::TAU / slowest);
    if rate_horizon.is_finite() {
        out.metric("rate_horizon", rate_horizon);
        match cesaro_rate(&split, rate_horizon) {
            Ok(r) => out.metric("rate", r),
            Err(e) => out.notes.push(format!("rate: {e}")),
        }
    }

    let width = cfg.profile_width;
    let profile = SampledProfile::gaussian(0.0, width, cfg.profile_samples).context("profile")?;
    let mut curve = Series::new("interference", &["x", "magnitude", "gaussian"]);
    let points = cfg.x_points.max(2);
    let mut worst = 0.0f64;
    for i in 0..points {
        let x = cfg.x_max / width * i as f64 / (points - 1) as f64;
        let v = quasi_continuous_interference(&profile, x).context("interference")?;
        let exact = (-(x * width).powi(2) / 2.0).exp();
        worst = worst.max((v - exact).abs());
        curve.push(vec![x.into(), v.into(), exact.into()]);
    }
    out.metric("profile_max_error", worst);
    out.series.push(curve);
    Ok(out)
}

fn max_entry_diff(a: &Observable, b: &Observable) -> f64 {
    (a.matrix() - b.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn wigner_check(cfg: &WignerCheckConfig, rng: &mut ChaCha8Rng) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::default();
    let mut pairing = Series::new("pairing", &["dim", "case", "pairing", "roundtrip", "product_discrepancy"]);
    for &n in &cfg.dims {
        let (mut worst_pair, mut worst_trip) = (0.0f64, 0.0f64);
        for case in 0..cfg.pairs {
            let a = random::hermitian(rng, n);
            let b = random::hermitian(rng, n);
            let p = pairing_check(&a, &b).context("pairing")?;
            let back = inverse_weyl(&wigner_transform(&a).context("transform")?).context("inverse")?;
            let trip = max_entry_diff(&a, &back);
            let prod = product_symbol_discrepancy(&a, &b).context("product")?;
            worst_pair = worst_pair.max(p);
            worst_trip = worst_trip.max(trip);
            pairing.push(vec![n.into(), case.into(), p.into(), trip.into(), prod.into()]);
        }
        out.metric(format!("pairing_max.{n}"), worst_pair);
        out.metric(format!("roundtrip_max.{n}"), worst_trip);
    }

    let mut cross = Series::new(
        "cross",
        &["dim", "case", "set_correlation", "operator_correlation", "difference", "idempotency_a", "idempotency_b"],
    );
    let mut quasi = Series::new("quasi", &["dim", "index", "eigenvalue"]);
    for &n in &cfg.cross_dims {
        let mut worst = 0.0f64;
        let rect = |rng: &mut ChaCha8Rng| {
            let mut r = [0; 4];
            for pair in r.chunks_mut(2) {
                let lo = rng.random_range(0..n);
                let len = rng.random_range(1..=n);
                pair.copy_from_slice(&[lo, len]);
            }
            r
        };
        // cyclic rectangle membership on the N x N phase grid
        let member = |r: [usize; 4]| move |q: usize, p: usize| (q + n - r[0]) % n < r[1] && (p + n - r[2]) % n < r[3];
        for case in 0..cfg.cross_cases {
            let (ra, rb) = (rect(rng), rect(rng));
            let fa = quantize_indicator(n, member(ra)).context("quantize")?;
            let fb = quantize_indicator(n, member(rb)).context("quantize")?;
            let cells = (n * n) as f64;
            let both = (0..n)
                .flat_map(|q| (0..n).map(move |p| (q, p)))
                .filter(|&(q, p)| member(ra)(q, p) && member(rb)(q, p))
                .count() as f64;
            let set_corr = both / cells - (fa.cells as f64 / cells) * (fb.cells as f64 / cells);
            let op_corr = normalized_correlation(&fa.operator, &fb.operator).context("correlation")?;
            worst = worst.max((set_corr - op_corr).abs());
            cross.push(vec![
                n.into(),
                case.into(),
                set_corr.into(),
                op_corr.into(),
                (set_corr - op_corr).into(),
                fa.idempotency_residual.into(),
                fb.idempotency_residual.into(),
            ]);
            if case == 0 {
                for (i, l) in fa.eigenvalues.iter().enumerate() {
                    quasi.push(vec![n.into(), i.into(), (*l).into()]);
                }
                out.metric(format!("idempotency.{n}"), fa.idempotency_residual);
            }
        }
        out.metric(format!("cross_max.{n}"), worst);
    }
    out.series.extend([pairing, cross, quasi]);
    Ok(out)
}
