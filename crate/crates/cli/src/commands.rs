use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use frameport::duals::{self, DUAL_TOL};
use frameport::frame::{self, FrameOptions, FRAME_TOL};
use frameport::ot::{self, Coupling};
use frameport::psd::{self, GeneralMatrix, PsdMatrix};
use frameport::DiscreteMeasure;

use crate::output::{CliError, Input};
use crate::{Cli, Command};

type Res<T> = Result<T, CliError>;

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library types serialize")
}

/// --tol, then FRAMEPORT_TOL, then the command default.
fn resolve_tol(cli: &Cli, default: f64) -> Res<(f64, &'static str)> {
    let (tol, source) = match (cli.tol, std::env::var("FRAMEPORT_TOL")) {
        (Some(t), _) => (t, "flag"),
        (None, Ok(raw)) => (
            raw.trim()
                .parse()
                .map_err(|_| CliError::usage(format!("FRAMEPORT_TOL={raw:?} is not a number")))?,
            "env",
        ),
        (None, Err(_)) => (default, "default"),
    };
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::usage(format!("tolerance must be positive, got {tol}")));
    }
    Ok((tol, source))
}

struct Ctx<'a> {
    cli: &'a Cli,
    inputs: Vec<Input>,
}

impl Ctx<'_> {
    fn expect_inputs(&self, min: usize, max: usize) -> Res<()> {
        let n = self.inputs.len();
        if n < min || n > max {
            let want = if min == max { min.to_string() } else { format!("{min} to {max}") };
            return Err(CliError::usage(format!(
                "{} takes {want} --input file(s), got {n}",
                self.cli.command.name()
            )));
        }
        Ok(())
    }

    fn measure(&self, i: usize) -> Res<DiscreteMeasure> {
        self.inputs[i].parse("measure")
    }

    fn psd(&self, i: usize) -> Res<PsdMatrix> {
        self.inputs[i].parse("matrix")
    }
}

pub fn run(cli: &Cli) -> Res<Value> {
    if !(cli.p >= 1.0 && cli.p.is_finite()) {
        return Err(CliError::usage(format!("--p must be a finite number >= 1, got {}", cli.p)));
    }
    if cli.grid == 0 {
        return Err(CliError::usage("--grid must be positive"));
    }
    let inputs = cli.input.iter().map(|p| Input::read(p)).collect::<Res<Vec<_>>>()?;
    let ctx = Ctx { cli, inputs };
    let default_tol = match cli.command {
        Command::DualCheck | Command::DualConstruct | Command::DeltaDual => DUAL_TOL,
        _ => FRAME_TOL,
    };
    let (tol, tol_source) = resolve_tol(cli, default_tol)?;
    let (result, provenance) = match cli.command {
        Command::FrameReport => frame_report(&ctx, tol)?,
        Command::Ellipsoid => ellipsoid(&ctx)?,
        Command::Distance => distance(&ctx)?,
        Command::ClosestFiber => closest_fiber(&ctx)?,
        Command::ClosestTight => closest_tight(&ctx)?,
        Command::Geodesic => geodesic(&ctx)?,
        Command::DualCheck => dual_check(&ctx, tol)?,
        Command::DualConstruct => dual_construct(&ctx, tol)?,
        Command::DeltaDual => delta_dual(&ctx, tol)?,
        Command::Pfp => pfp(&ctx, tol)?,
        Command::OracleOt => oracle_ot(&ctx)?,
    };
    let mut params = Map::new();
    params.insert("p".into(), json!(cli.p));
    params.insert("tol".into(), json!(tol));
    params.insert("tol_source".into(), json!(tol_source));
    params.insert("grid".into(), json!(cli.grid));
    if let Some(seed) = cli.seed {
        params.insert("seed".into(), json!(seed));
    }
    let mut provenance = provenance;
    provenance.insert("library".into(), json!(format!("frameport {}", env!("CARGO_PKG_VERSION"))));
    Ok(json!({
        "command": cli.command.name(),
        "inputs": ctx.inputs.iter().map(Input::summary).collect::<Vec<_>>(),
        "parameters": params,
        "result": result,
        "provenance": provenance,
    }))
}

fn provenance(formula: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("formula".into(), json!(formula));
    m
}

type Out = (Value, Map<String, Value>);

fn frame_report(ctx: &Ctx, tol: f64) -> Res<Out> {
    ctx.expect_inputs(1, 1)?;
    let mu = ctx.measure(0)?;
    let opts = FrameOptions { frame_tol: tol, grid: ctx.cli.grid };
    let r = frame::frame_report(&mu, ctx.cli.p, opts)?;
    let result = json!({
        "A": r.lower_bound,
        "B": r.upper_bound,
        "frame": r.is_frame,
        "tight": r.is_tight,
        "parseval": r.is_parseval,
        "frame_operator": r.frame_operator,
        "argmin": r.argmin,
        "argmax": r.argmax,
        "grid": r.grid,
    });
    Ok((result, provenance(r.method)))
}

fn ellipsoid(ctx: &Ctx) -> Res<Out> {
    ctx.expect_inputs(1, 1)?;
    let mu = ctx.measure(0)?;
    let e = frame::frame_ellipsoid(&mu);
    let result = json!({
        "axes": e.axes,
        "semi_lengths": e.semi_lengths,
        "degenerate": e.is_degenerate(),
        "frame_operator": frame::frame_operator(&mu),
    });
    Ok((result, provenance("eigendecomposition")))
}

fn distance(ctx: &Ctx) -> Res<Out> {
    ctx.expect_inputs(2, 2)?;
    match (ctx.inputs[0].kind(), ctx.inputs[1].kind()) {
        ("matrix", "matrix") => {
            let (s, t) = (ctx.psd(0)?, ctx.psd(1)?);
            let b = psd::bures_squared(&s, &t)?;
            let result = json!({ "bures_squared": b, "d_w": b.sqrt() });
            Ok((result, provenance("gelbrich")))
        }
        ("measure", "measure") => {
            let (mu, nu) = (ctx.measure(0)?, ctx.measure(1)?);
            let (s, t) = (frame::frame_operator(&mu), frame::frame_operator(&nu));
            let b = psd::bures_squared(&s, &t)?;
            let plan = ot::solve_exact(&mu, &nu, 2.0)?;
            let result = json!({
                "bures_squared": b,
                "d_w": b.sqrt(),
                "oracle_w2_squared": plan.cost,
                "oracle_w2": plan.distance(),
                "gap": plan.cost - b,
            });
            let mut prov = provenance("gelbrich");
            prov.insert("oracle".into(), json!("transportation-simplex"));
            Ok((result, prov))
        }
        (a, b) => Err(CliError::input(format!(
            "distance takes two matrices or two measures, got {a} and {b}"
        ))),
    }
}

fn closest_fiber(ctx: &Ctx) -> Res<Out> {
    ctx.expect_inputs(2, 2)?;
    let (mu, t) = (ctx.measure(0)?, ctx.psd(1)?);
    let f = frame::closest_in_fiber(&mu, &t)?;
    let oracle = ot::solve_exact(&mu, &f.measure, 2.0)?.cost;
    let mut result = to_value(&f);
    result["oracle_w2_squared"] = json!(oracle);
    let mut prov = provenance("optimal-map");
    prov.insert("check".into(), json!("oracle"));
    Ok((result, prov))
}

fn closest_tight(ctx: &Ctx) -> Res<Out> {
    ctx.expect_inputs(1, 2)?;
    let mu = ctx.measure(0)?;
    let (r, formula) = if ctx.inputs.len() == 2 {
        (frame::closest_on_ray(&mu, &ctx.psd(1)?)?, "fidelity-ray")
    } else {
        (frame::closest_tight(&mu)?, "fidelity-ray-identity")
    };
    Ok((to_value(&r), provenance(formula)))
}

fn geodesic(ctx: &Ctx) -> Res<Out> {
    ctx.expect_inputs(2, 2)?;
    let (mu, t) = (ctx.measure(0)?, ctx.psd(1)?);
    let time = ctx.cli.t;
    let f = frame::closest_in_fiber(&mu, &t)?;
    let point = frame::geodesic(&mu, &f.map, time)?;
    let result = json!({
        "t": time,
        "measure": point,
        "map": f.map,
        "length": f.distance,
        "distance_from_start": time * f.distance,
        "frame_operator": frame::frame_operator(&point),
    });
    Ok((result, provenance("optimal-map-interpolation")))
}

fn certificate_value(cert: &duals::DualCertificate) -> Value {
    let mut v = to_value(cert);
    let frames = duals::marginals_are_frames(&cert.coupling).ok();
    v["marginals_are_frames"] = json!(frames);
    v
}

fn dual_check(ctx: &Ctx, tol: f64) -> Res<Out> {
    ctx.expect_inputs(1, 2)?;
    let gamma: Coupling = ctx.inputs[0].parse("coupling")?;
    let m = if ctx.inputs.len() == 2 {
        ctx.inputs[1].parse("matrix")?
    } else {
        GeneralMatrix::identity(gamma.left_dim())
    };
    let cert = duals::is_m_dual(&gamma, &m, tol)?;
    let mut result = json!({ "certificate": certificate_value(&cert) });
    let is_identity = m == GeneralMatrix::identity(gamma.left_dim());
    if cert.valid && is_identity {
        let rep = duals::dual_distance_check(gamma.left_marginal(), gamma.right_marginal(), &gamma)?;
        result["distance_report"] = to_value(&rep);
    }
    Ok((result, provenance("coupling-frame-operator")))
}

fn dual_construct(ctx: &Ctx, tol: f64) -> Res<Out> {
    ctx.expect_inputs(1, 1)?;
    let mu = ctx.measure(0)?;
    let scale = ctx.cli.scale;
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(CliError::usage(format!("--scale must be nonnegative, got {scale}")));
    }
    let (h, formula) = match ctx.cli.seed {
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h: Vec<DVector<f64>> = (0..mu.len())
                .map(|_| DVector::from_fn(mu.dim(), |_, _| scale * rng.random_range(-1.0..=1.0)))
                .collect();
            (h, "h-pushforward")
        }
        None => (vec![DVector::zeros(mu.dim()); mu.len()], "canonical"),
    };
    let (nu, gamma) = duals::pushforward_dual(&mu, &h)?;
    let cert = duals::is_transport_dual(&gamma, tol)?;
    let rep = duals::dual_distance_check(&mu, &nu, &gamma)?;
    let result = json!({
        "dual": nu,
        "h": h.iter().map(|v| v.as_slice().to_vec()).collect::<Vec<_>>(),
        "certificate": certificate_value(&cert),
        "distance_report": rep,
    });
    Ok((result, provenance(formula)))
}

fn delta_dual(ctx: &Ctx, tol: f64) -> Res<Out> {
    ctx.expect_inputs(0, 0)?;
    let (a, lambda) = match (ctx.cli.a, ctx.cli.lambda) {
        (Some(a), Some(l)) => (a, l),
        _ => return Err(CliError::usage("delta-dual needs --a and --lambda")),
    };
    let nu = duals::delta_dual_family(a, lambda)?;
    let gamma = duals::delta_coupling(&[a], &nu)?;
    let cert = duals::is_transport_dual(&gamma, tol)?;
    let w2 = ot::wasserstein_p(&DiscreteMeasure::dirac(vec![a])?, &nu, 2.0)?;
    let result = json!({
        "a": a,
        "lambda": lambda,
        "measure": nu,
        "mean": nu.mean()[0],
        "second_moment": nu.moment(2.0)?,
        "w2_to_delta": w2,
        "w2_lower_bound": (a - 1.0 / a).abs(),
        "certificate": certificate_value(&cert),
    });
    Ok((result, provenance("delta-family")))
}

fn pfp(ctx: &Ctx, tol: f64) -> Res<Out> {
    ctx.expect_inputs(1, 1)?;
    let mu = ctx.measure(0)?;
    let opts = FrameOptions { frame_tol: tol, grid: ctx.cli.grid };
    let r = frame::pfp_minimizer_check(&mu, ctx.cli.p, opts)?;
    let mut prov = provenance("double-sum");
    prov.insert("minimizer_check".into(), json!(r.method));
    Ok((to_value(&r), prov))
}

fn oracle_ot(ctx: &Ctx) -> Res<Out> {
    ctx.expect_inputs(2, 2)?;
    let (mu, nu) = (ctx.measure(0)?, ctx.measure(1)?);
    let plan = ot::solve_exact(&mu, &nu, ctx.cli.p)?;
    let mut result = to_value(&plan);
    result["distance"] = json!(plan.distance());
    Ok((result, provenance("oracle")))
}
