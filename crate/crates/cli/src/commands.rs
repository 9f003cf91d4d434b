use std::fmt::Write as _;

use mtorus::{
    build_frame, decompose as decompose_pair, find_counterexamples, verify_frame, Certificate,
    IntMatrix, MappingTorus, PerturbedFrame, Result, SearchConfig, TorusAutomorphism,
    VerificationReport,
};
use serde::Serialize;
use serde_json::{json, Value};

/// Structured result of one subcommand.
pub struct Outcome {
    pub json: Value,
    pub text: String,
    pub passed: bool,
}

impl Outcome {
    fn ok<T: Serialize>(value: &T, text: String) -> Outcome {
        Outcome::checked(value, text, true)
    }

    fn checked<T: Serialize>(value: &T, text: String, passed: bool) -> Outcome {
        Outcome {
            json: serde_json::to_value(value).expect("result types serialize to JSON"),
            text,
            passed,
        }
    }
}

fn automorphism(matrix: IntMatrix, cap: u64) -> Result<TorusAutomorphism> {
    TorusAutomorphism::with_order_cap(matrix, cap)
}

pub fn order(matrix: &IntMatrix, cap: u64) -> Result<Outcome> {
    if !matrix.is_unimodular() {
        return Err(mtorus::Error::NotUnimodular { det: matrix.det() });
    }
    let order = matrix.order(cap)?;
    Ok(Outcome::ok(
        &json!({ "order": order }),
        format!("order: {order}\n"),
    ))
}

pub fn pi1(matrix: IntMatrix, cap: u64) -> Result<Outcome> {
    let torus = MappingTorus::new(automorphism(matrix, cap)?);
    let data = torus.pi1();
    let mut text = String::new();
    let k = data.fiber_rank;
    let _ = writeln!(text, "pi_1: Z^{k} x| Z, monodromy {}", data.monodromy);
    let _ = writeln!(text, "abelian: {}", data.abelian);
    let _ = writeln!(text, "H_1: {}", describe_h1(&data.abelianization));
    Ok(Outcome::ok(&data, text))
}

fn describe_h1(h1: &mtorus::Abelianization) -> String {
    let mut parts = vec![if h1.free_rank == 1 {
        "Z".to_string()
    } else {
        format!("Z^{}", h1.free_rank)
    }];
    parts.extend(h1.torsion.iter().map(|t| format!("Z/{t}")));
    parts.join(" + ")
}

#[derive(Serialize)]
struct RankOutput<'a> {
    #[serde(rename = "A")]
    a: &'a IntMatrix,
    k: usize,
    order: mtorus::MatrixOrder,
    orientable: bool,
    is_torus: bool,
    rank: usize,
    justification: mtorus::torus_bundle::RankJustification,
}

pub fn rank(matrix: IntMatrix, cap: u64) -> Result<Outcome> {
    let torus = MappingTorus::new(automorphism(matrix, cap)?);
    let rank = torus.rank();
    let out = RankOutput {
        a: torus.monodromy(),
        k: torus.fiber_dim(),
        order: torus.fiber().order(),
        orientable: torus.is_orientable(),
        is_torus: torus.is_torus(),
        rank: rank.value,
        justification: rank.justification,
    };
    let text = format!(
        "rank: {} (dim {}, {})\n",
        rank.value,
        torus.total_dim(),
        if out.is_torus {
            "torus"
        } else {
            "nontrivial monodromy"
        }
    );
    Ok(Outcome::ok(&out, text))
}

#[derive(Serialize)]
struct DecomposeOutput {
    #[serde(rename = "A")]
    a: IntMatrix,
    #[serde(rename = "B")]
    b: IntMatrix,
    m: u64,
    n: u64,
    c: i64,
    d: i64,
    lambda: (i64, i64),
    mu: (i64, i64),
    #[serde(rename = "H")]
    h: IntMatrix,
    h_order: mtorus::MatrixOrder,
    h_power_m_minus_n: IntMatrix,
    checks: mtorus::DecompositionChecks,
}

pub fn decompose(a: IntMatrix, b: IntMatrix, cap: u64) -> Result<Outcome> {
    let dec = decompose_pair(&automorphism(a, cap)?, &automorphism(b, cap)?)?;
    let checks = dec.checks();
    let out = DecomposeOutput {
        a: dec.a.matrix().clone(),
        b: dec.b.matrix().clone(),
        m: dec.bezout.m,
        n: dec.bezout.n,
        c: dec.bezout.c,
        d: dec.bezout.d,
        lambda: dec.basis.lambda,
        mu: dec.basis.mu,
        h: dec.h.matrix().clone(),
        h_order: dec.h.order(),
        h_power_m_minus_n: dec.h_power_m_minus_n()?,
        checks,
    };
    let mut text = String::new();
    let _ = writeln!(text, "periods: m = {}, n = {}", out.m, out.n);
    let _ = writeln!(
        text,
        "bezout: {}*{} + {}*{} = 1",
        out.m, out.c, out.n, out.d
    );
    let _ = writeln!(text, "basis: lambda = {:?}, mu = {:?}", out.lambda, out.mu);
    let _ = writeln!(text, "H: {}", out.h);
    let _ = writeln!(text, "H order: {}", out.h_order);
    let _ = writeln!(text, "checks: {}", describe_checks(&checks));
    Ok(Outcome::checked(&out, text, checks.all()))
}

fn describe_checks(c: &mtorus::DecompositionChecks) -> String {
    format!(
        "bezout {}, h_power {}, basis_unimodular {}",
        c.bezout, c.h_power, c.basis_unimodular
    )
}

fn describe_certificate(cert: &Certificate) -> String {
    let mut text = String::new();
    let _ = writeln!(
        text,
        "A: {} (period {}, rank {})",
        cert.a, cert.m, cert.rank_a
    );
    let _ = writeln!(
        text,
        "B: {} (period {}, rank {})",
        cert.b, cert.n, cert.rank_b
    );
    let _ = writeln!(text, "H: {}", cert.h);
    let _ = writeln!(text, "bezout: c = {}, d = {}", cert.c, cert.d);
    let _ = writeln!(
        text,
        "rank(M(A) x M(B)) = {}, rank(M(A)) + rank(M(B)) = {}, gap = {}",
        cert.rank_product,
        cert.rank_a + cert.rank_b,
        cert.gap
    );
    let _ = writeln!(text, "checks: {}", describe_checks(&cert.checks));
    text
}

pub fn rank_gap(a: IntMatrix, b: IntMatrix, cap: u64) -> Result<Outcome> {
    let cert = decompose_pair(&automorphism(a, cap)?, &automorphism(b, cap)?)?.certificate();
    let text = describe_certificate(&cert);
    let passed = cert.checks.all();
    Ok(Outcome::checked(&cert, text, passed))
}

fn describe_report(label: &str, r: &VerificationReport) -> String {
    format!(
        "{label}: {} (bracket_max {:.3e}, gram_min {:.3e}, seam {:.3e}, flatness {:.3e}, grid {})\n",
        if r.pass { "pass" } else { "FAIL" },
        r.bracket_max,
        r.gram_min,
        r.seam.max(),
        r.flatness.max(),
        r.grid_n
    )
}

pub fn frame_verify(
    matrix: &IntMatrix,
    grid: usize,
    tol: f64,
    perturb: Option<f64>,
) -> Result<Outcome> {
    let frame = build_frame(matrix)?;
    let report = match perturb {
        Some(eps) => verify_frame(&PerturbedFrame::new(&frame, eps)?, grid, tol)?,
        None => verify_frame(&frame, grid, tol)?,
    };
    let text = describe_report("frame", &report);
    let passed = report.pass;
    Ok(Outcome::checked(&report, text, passed))
}

pub fn search(cfg: SearchConfig, limit: usize) -> Result<Outcome> {
    let found = find_counterexamples(&cfg, limit)?;
    let mut text = String::new();
    for (i, c) in found.iter().enumerate() {
        let _ = writeln!(
            text,
            "{i}: A = {} (m = {}), B = {} (n = {}), H = {}, ranks {} + {} < {}",
            c.certificate.a,
            c.certificate.m,
            c.certificate.b,
            c.certificate.n,
            c.certificate.h,
            c.certificate.rank_a,
            c.certificate.rank_b,
            c.certificate.rank_product
        );
    }
    if found.is_empty() {
        text.push_str("no counterexamples in range\n");
    }
    Ok(Outcome::ok(&found, text))
}

#[derive(Serialize)]
struct Frames {
    #[serde(rename = "A")]
    a: VerificationReport,
    #[serde(rename = "B")]
    b: VerificationReport,
    #[serde(rename = "H")]
    h: VerificationReport,
}

#[derive(Serialize)]
struct CertifyOutput {
    #[serde(flatten)]
    certificate: Certificate,
    #[serde(rename = "orientable_A")]
    orientable_a: bool,
    #[serde(rename = "orientable_B")]
    orientable_b: bool,
    frames: Frames,
    pass: bool,
}

pub fn certify(a: IntMatrix, b: IntMatrix, cap: u64, grid: usize, tol: f64) -> Result<Outcome> {
    let dec = decompose_pair(&automorphism(a, cap)?, &automorphism(b, cap)?)?;
    let certificate = dec.certificate();
    let report =
        |m: &IntMatrix| -> Result<VerificationReport> { verify_frame(&build_frame(m)?, grid, tol) };
    let frames = Frames {
        a: report(dec.a.matrix())?,
        b: report(dec.b.matrix())?,
        h: report(dec.h.matrix())?,
    };
    let pass = certificate.checks.all()
        && certificate.gap == 1
        && frames.a.pass
        && frames.b.pass
        && frames.h.pass;
    let mut text = describe_certificate(&certificate);
    text.push_str(&describe_report("frame A", &frames.a));
    text.push_str(&describe_report("frame B", &frames.b));
    text.push_str(&describe_report("frame H", &frames.h));
    let _ = writeln!(text, "certificate: {}", if pass { "pass" } else { "FAIL" });
    let out = CertifyOutput {
        certificate,
        orientable_a: dec.a.preserves_orientation(),
        orientable_b: dec.b.preserves_orientation(),
        frames,
        pass,
    };
    Ok(Outcome::checked(&out, text, pass))
}
