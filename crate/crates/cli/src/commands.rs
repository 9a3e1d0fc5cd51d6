use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use cuntz_core::algebra::{flip_unitary, MatrixJson};
use cuntz_core::endo::word_samples;
use cuntz_core::entropy::{budget_from_env, entropy_estimate, ItineraryConfig};
use cuntz_core::group::GroupSpec;
use cuntz_core::masa::{check_masa_invariant, closed_form_rule, extract_local_rule, ClosedFormKind, LocalRule, MasaError};
use cuntz_core::munit::{commutant_dimension, extract_w_from_with, relative_commutant, CommutantReport, LegMatrix, MunitError};
use cuntz_core::pipeline::{replicate, ReplicateConfig};
use cuntz_core::{CMatrix, Complex64, CuntzElement, CuntzTerm, DualGroup, Endomorphism, ScalarConfig};

use crate::args::{CheckCommand, Cli, Command, ConstructObject, Format, GroupArgs};

/// Result of a command that ran to completion: whether its checks passed.
pub struct Outcome {
    pub passed: bool,
}

impl Outcome {
    fn pass() -> Self {
        Outcome { passed: true }
    }

    fn verdict(passed: bool) -> Self {
        Outcome { passed }
    }
}

struct Ctx {
    format: Format,
    cfg: ScalarConfig,
}

impl Ctx {
    fn emit(&self, text: impl FnOnce() -> String, value: Value) {
        match self.format {
            Format::Text => print!("{}", text()),
            Format::Json => println!("{}", serde_json::to_string_pretty(&value).expect("JSON value")),
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let cfg = ScalarConfig::new(cli.zero_tol, cli.eq_tol).map_err(|e| anyhow!("{e}"))?;
    let ctx = Ctx {
        format: cli.format,
        cfg,
    };
    match cli.command {
        Command::Replicate { group, m, depth, n } => cmd_replicate(&ctx, &group, m, depth, n),
        Command::Check(c) => match c {
            CheckCommand::Pentagon { file } => cmd_pentagon(&ctx, &file),
            CheckCommand::Masa { endo, depth } => cmd_masa(&ctx, &endo, depth, None),
            CheckCommand::Unitary { elem } => cmd_unitary(&ctx, &elem),
            CheckCommand::ClosedForms { group } => cmd_closed_forms(&ctx, &group),
            CheckCommand::Phi {
                endo,
                max_len,
                random,
                seed,
            } => cmd_phi(&ctx, &endo, max_len, random, seed),
        },
        Command::Entropy { rule, n, m, budget } => cmd_entropy(&ctx, &rule, n, m, budget),
        Command::ExtractRule { endo, depth, out } => cmd_extract(&ctx, &endo, depth, out.as_deref()),
        Command::Masa { endo, depth, emit_rule } => cmd_masa(&ctx, &endo, depth, emit_rule.as_deref()),
        Command::Pentagon { file } => cmd_pentagon(&ctx, &file),
        Command::Commutant { generators, endo, k, m } => cmd_commutant(&ctx, generators.as_deref(), endo.as_deref(), k, m),
        Command::Apply { endo, elem } => cmd_apply(&ctx, &endo, &elem),
        Command::Construct {
            object,
            group,
            n,
            kind,
            depth,
            out,
        } => cmd_construct(&ctx, object, &group, n, &kind, depth, out.as_deref()),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_or_print(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, body).with_context(|| format!("cannot write {}", p.display())),
        None => {
            println!("{body}");
            Ok(())
        }
    }
}

fn load_element(path: &Path) -> Result<CuntzElement> {
    CuntzElement::from_json(&read(path)?).with_context(|| format!("invalid element in {}", path.display()))
}

fn load_endo(path: &Path, cfg: &ScalarConfig) -> Result<Endomorphism> {
    let u = load_element(path)?;
    Endomorphism::from_unitary_with(u, cfg).with_context(|| format!("{} is not the unitary of an endomorphism", path.display()))
}

fn load_matrix(path: &Path) -> Result<CMatrix> {
    MatrixJson::parse(&read(path)?).with_context(|| format!("invalid matrix in {}", path.display()))
}

fn group_spec(args: &GroupArgs) -> Result<GroupSpec> {
    match (&args.group, &args.group_file) {
        (Some(s), None) => GroupSpec::parse_orders(s).map_err(|e| anyhow!("{e}")),
        (None, Some(p)) => serde_json::from_str(&read(p)?).with_context(|| format!("invalid group spec in {}", p.display())),
        _ => bail!("give exactly one of --group or --group-file"),
    }
}

fn load_group(args: &GroupArgs, cfg: &ScalarConfig) -> Result<DualGroup> {
    group_spec(args)?.build_with(cfg).map_err(|e| anyhow!("{e}"))
}

fn term_json(t: &CuntzTerm) -> Value {
    json!({"re": t.coeff.re, "im": t.coeff.im, "J": t.j.letters(), "K": t.k.letters()})
}

fn mark(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_replicate(ctx: &Ctx, group: &GroupArgs, m: usize, depth: usize, n: usize) -> Result<Outcome> {
    if m < 2 {
        bail!("--m must be at least 2");
    }
    if depth == 0 || n == 0 {
        bail!("--depth and --n must be at least 1");
    }
    // an invalid bracket is a failed check, not a usage error
    let g = group_spec(group)?.build_unvalidated().map_err(|e| anyhow!("{e}"))?;
    let cfg = ReplicateConfig {
        masa_depth: depth,
        window: n,
        m_max: m,
        budget: budget_from_env(),
    };
    let report = replicate(&g, &cfg);
    let value = serde_json::to_value(&report)?;
    ctx.emit(|| report.text(), value);
    Ok(Outcome::verdict(report.passed()))
}

fn cmd_pentagon(ctx: &Ctx, file: &Path) -> Result<Outcome> {
    let m = load_matrix(file)?;
    let v = match LegMatrix::new_with(m, &ctx.cfg) {
        Ok(v) => v,
        Err(MunitError::NotUnitary(dev)) => {
            ctx.emit(
                || format!("pentagon: FAIL (matrix is not unitary, deviation {dev:.3e})\n"),
                json!({"check": "pentagon", "passed": false, "provenance": "computed", "reason": "not unitary", "deviation": dev}),
            );
            return Ok(Outcome::verdict(false));
        }
        Err(e) => bail!("{e}"),
    };
    let defect = v.pentagon_defect();
    let passed = defect <= ctx.cfg.equality_tol;
    ctx.emit(
        || format!("pentagon: {} (max-entry defect {defect:.3e})\n", mark(passed)),
        json!({"check": "pentagon", "passed": passed, "provenance": "computed", "defect": defect, "tolerance": ctx.cfg.equality_tol}),
    );
    Ok(Outcome::verdict(passed))
}

fn cmd_masa(ctx: &Ctx, endo: &Path, depth: usize, emit_rule: Option<&Path>) -> Result<Outcome> {
    if depth == 0 {
        bail!("--depth must be at least 1");
    }
    let rho = load_endo(endo, &ctx.cfg)?;
    let check = check_masa_invariant(&rho, depth)?;
    let witness = check.violation.as_ref().map(|v| {
        json!({"cylinder": v.cylinder.letters(), "reason": format!("{:?}", v.reason), "term": term_json(&v.witness)})
    });
    let mut value = json!({
        "check": "masa",
        "passed": check.is_invariant(),
        "provenance": "computed",
        "depth": depth,
        "cylinders_checked": check.cylinders_checked,
        "witness": witness,
    });
    let mut text = match &check.violation {
        None => format!("masa: PASS ({} cylinders up to length {depth})\n", check.cylinders_checked),
        Some(v) => format!("masa: FAIL\n  {v}\n"),
    };
    let mut passed = check.is_invariant();
    if passed {
        if let Some(path) = emit_rule {
            match extract_local_rule(&rho, depth) {
                Ok(rule) => {
                    fs::write(path, rule.to_json()).with_context(|| format!("cannot write {}", path.display()))?;
                    text.push_str(&format!("rule with lookahead {} written to {}\n", rule.lookahead(), path.display()));
                    value["rule_lookahead"] = json!(rule.lookahead());
                }
                Err(e) => {
                    passed = false;
                    text.push_str(&format!("rule extraction failed: {e}\n"));
                    value["passed"] = json!(false);
                    value["extraction_error"] = json!(e.to_string());
                }
            }
        }
    }
    ctx.emit(|| text, value);
    Ok(Outcome::verdict(passed))
}

fn cmd_extract(ctx: &Ctx, endo: &Path, depth: usize, out: Option<&Path>) -> Result<Outcome> {
    if depth == 0 {
        bail!("--depth must be at least 1");
    }
    let rho = load_endo(endo, &ctx.cfg)?;
    match extract_local_rule(&rho, depth) {
        Ok(rule) => {
            write_or_print(out, &rule.to_json())?;
            if out.is_some() && ctx.format == Format::Text {
                println!("lookahead {}, depth {depth}", rule.lookahead());
            }
            Ok(Outcome::pass())
        }
        Err(e @ (MasaError::NotInvariant(_) | MasaError::Partition { .. } | MasaError::LookaheadTooLarge { .. } | MasaError::Truncation { .. })) => {
            ctx.emit(
                || format!("extract-rule: FAIL\n  {e}\n"),
                json!({"check": "extract-rule", "passed": false, "provenance": "computed", "reason": e.to_string()}),
            );
            Ok(Outcome::verdict(false))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_unitary(ctx: &Ctx, elem: &Path) -> Result<Outcome> {
    let u = load_element(elem)?;
    let passed = u.is_unitary(&ctx.cfg);
    ctx.emit(
        || format!("unitary: {}\n", mark(passed)),
        json!({"check": "unitary", "passed": passed, "provenance": "computed"}),
    );
    Ok(Outcome::verdict(passed))
}

fn cmd_closed_forms(ctx: &Ctx, group: &GroupArgs) -> Result<Outcome> {
    let g = load_group(group, &ctx.cfg)?;
    let report = g.verify_closed_forms()?;
    let passed = report.all_pass();
    let mut value = serde_json::to_value(&report)?;
    value["check"] = json!("closed-forms");
    value["passed"] = json!(passed);
    value["provenance"] = json!("computed");
    ctx.emit(
        || {
            format!(
                "closed forms over {}: {}\n  bracket axioms       {}\n  associated unitary   {}\n  ρ∘β                  {}\n  ρ²                   {}\n  γ² = Φ∘γ             {}\n",
                report.group,
                mark(passed),
                mark(report.bracket_valid),
                mark(report.unitary_matches),
                mark(report.rho_beta_matches),
                mark(report.rho_squared_matches),
                mark(report.square_root_relation)
            )
        },
        value,
    );
    Ok(Outcome::verdict(passed))
}

fn random_element(rng: &mut ChaCha8Rng, n: usize, max_len: usize) -> CuntzElement {
    let terms = rng.gen_range(1..=4);
    let word = |rng: &mut ChaCha8Rng| -> Vec<u8> {
        let len = rng.gen_range(0..=max_len);
        (0..len).map(|_| rng.gen_range(0..n) as u8).collect()
    };
    let ts: Vec<_> = (0..terms)
        .map(|_| {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let j = word(rng);
            let k = word(rng);
            CuntzTerm::new(c, j, k)
        })
        .collect();
    CuntzElement::from_terms(n, ts).expect("letters below N")
}

fn cmd_phi(ctx: &Ctx, endo: &Path, max_len: usize, random: usize, seed: u64) -> Result<Outcome> {
    let rho = load_endo(endo, &ctx.cfg)?;
    let mut samples = word_samples(rho.n(), max_len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    samples.extend((0..random).map(|_| random_element(&mut rng, rho.n(), max_len)));
    let mut worst = 0.0f64;
    for x in &samples {
        worst = worst.max((rho.apply(x)?.phi() - x.phi()).norm());
    }
    let passed = worst <= ctx.cfg.equality_tol;
    ctx.emit(
        || format!("phi: {} ({} samples, max |φ(ρ(x)) − φ(x)| = {worst:.3e})\n", mark(passed), samples.len()),
        json!({"check": "phi", "passed": passed, "provenance": "computed", "samples": samples.len(), "max_deviation": worst, "seed": seed}),
    );
    Ok(Outcome::verdict(passed))
}

fn cmd_entropy(ctx: &Ctx, rule: &Path, n: usize, m: usize, budget: Option<u64>) -> Result<Outcome> {
    let rule = LocalRule::from_json(&read(rule)?).with_context(|| format!("invalid rule in {}", rule.display()))?;
    let mut cfg = ItineraryConfig::new(n, m)?;
    if let Some(b) = budget {
        cfg = cfg.with_budget(b);
    }
    let est = entropy_estimate(&rule, &cfg)?;
    let mut value = serde_json::to_value(&est)?;
    value["provenance"] = json!("computed");
    ctx.emit(|| est.table(), value);
    Ok(Outcome::pass())
}

fn commutant_value(r: &CommutantReport) -> Value {
    json!({
        "check": "commutant",
        "provenance": "computed",
        "generators": r.generator_count,
        "ambient_dimension": r.ambient_dimension,
        "commutant_dimension": r.commutant_dimension,
        "residual": r.residual,
    })
}

fn cmd_commutant(
    ctx: &Ctx,
    generators: Option<&Path>,
    endo: Option<&Path>,
    k: Option<usize>,
    m: Option<usize>,
) -> Result<Outcome> {
    let report = match (generators, endo) {
        (Some(path), None) => {
            let raw: Vec<MatrixJson> =
                serde_json::from_str(&read(path)?).with_context(|| format!("invalid matrix list in {}", path.display()))?;
            let mats = raw
                .into_iter()
                .map(CMatrix::try_from)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| anyhow!("{e}"))?;
            commutant_dimension(&mats)?
        }
        (None, Some(path)) => {
            let rho = load_endo(path, &ctx.cfg)?;
            let k = k.ok_or_else(|| anyhow!("--k is required with --endo"))?;
            relative_commutant(&rho, k, m.unwrap_or(k + 1))?
        }
        _ => bail!("give exactly one of --generators or --endo"),
    };
    ctx.emit(
        || {
            format!(
                "commutant dimension {} (ambient {}, {} generators, residual {:.3e})\n",
                report.commutant_dimension, report.ambient_dimension, report.generator_count, report.residual
            )
        },
        commutant_value(&report),
    );
    Ok(Outcome::pass())
}

fn cmd_apply(ctx: &Ctx, endo: &Path, elem: &Path) -> Result<Outcome> {
    let rho = load_endo(endo, &ctx.cfg)?;
    let x = load_element(elem)?;
    if x.n() != rho.n() {
        bail!("element is over O_{} but the endomorphism acts on O_{}", x.n(), rho.n());
    }
    let y = rho.apply(&x)?;
    match ctx.format {
        Format::Text => println!("{y}"),
        Format::Json => println!("{}", y.to_json()),
    }
    Ok(Outcome::pass())
}

fn cmd_construct(
    ctx: &Ctx,
    object: ConstructObject,
    group: &GroupArgs,
    n: Option<usize>,
    kind: &str,
    depth: usize,
    out: Option<&Path>,
) -> Result<Outcome> {
    let alphabet = || n.ok_or_else(|| anyhow!("--n is required for this object"));
    let body = match object {
        ConstructObject::Flip => flip_unitary(alphabet()?)?.to_json(),
        ConstructObject::Shift => Endomorphism::canonical_shift(alphabet()?)?.unitary().to_json(),
        ConstructObject::Identity => Endomorphism::identity(alphabet()?)?.unitary().to_json(),
        _ => {
            let g = load_group(group, &ctx.cfg)?;
            match object {
                ConstructObject::Izumi => g.izumi_endomorphism()?.unitary().to_json(),
                ConstructObject::RhoPrime => g.rho_prime()?.unitary().to_json(),
                ConstructObject::Gamma => g.gamma()?.unitary().to_json(),
                ConstructObject::Fourier => g.fourier_automorphism()?.unitary().to_json(),
                ConstructObject::W => {
                    let w = extract_w_from_with(&g.gamma()?, &ctx.cfg)?;
                    MatrixJson::render(w.w.matrix())
                }
                ConstructObject::Rule => {
                    let k = ClosedFormKind::parse(kind).ok_or_else(|| anyhow!("unknown rule kind {kind:?}"))?;
                    closed_form_rule(k, &g, depth)?.to_json()
                }
                _ => unreachable!("handled above"),
            }
        }
    };
    write_or_print(out, &body)?;
    Ok(Outcome::pass())
}
