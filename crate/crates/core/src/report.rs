//! Structured check reports.
//!
//! One JSON document per run with a fixed schema ([`SCHEMA`]): tool info,
//! a system block with the input hash, and one entry per pipeline stage.
//! Every numeric claim is a [`Claim`] pairing the measured value with the
//! tolerance it was judged against, so a report is auditable on its own.
//! Reports are byte-deterministic for a fixed spec and seed once the two
//! volatile fields (`generated_at`, per-stage `seconds`) are normalized.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Name of the report consumers see; also the binary name.
pub const TOOL_NAME: &str = "liouville";

pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

pub fn input_sha256(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// A measured value together with the tolerance it was checked against.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Claim {
    pub value: f64,
    pub tol: f64,
    pub ok: bool,
}

impl Claim {
    /// Residual claim: ok when the value stays at or below the tolerance.
    pub fn residual(value: f64, tol: f64) -> Claim {
        Claim {
            value,
            tol,
            ok: value.is_finite() && value <= tol,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankClaim {
    pub min: usize,
    pub max: usize,
    pub expected: usize,
    pub ok: bool,
}

impl RankClaim {
    pub fn exact(range: (usize, usize), expected: usize) -> RankClaim {
        RankClaim {
            min: range.0,
            max: range.1,
            expected,
            ok: range.0 == expected && range.1 == expected,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    Failed,
    Inconclusive,
    Skipped,
    Error,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stage<T> {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Wall-clock seconds; volatile, zeroed by [`Report::normalized`].
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<T>,
}

impl<T> Stage<T> {
    pub fn skipped(reason: impl Into<String>) -> Stage<T> {
        Stage {
            status: Status::Skipped,
            reason: Some(reason.into()),
            seconds: 0.0,
            data: None,
        }
    }

    pub fn error(reason: impl Into<String>, seconds: f64) -> Stage<T> {
        Stage {
            status: Status::Error,
            reason: Some(reason.into()),
            seconds,
            data: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemInfo {
    pub name: String,
    pub dim: usize,
    pub n: usize,
    pub k: usize,
    pub expected_mode: String,
    pub input_sha256: String,
    pub seed: u64,
    pub sample_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BracketStage {
    /// "involution" when k <= n, "closure" when k > n.
    pub kind: String,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub involution_residual: Option<Claim>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_pair: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closure_residual: Option<Claim>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matched_groups: Option<usize>,
    /// Declared closure table against measured brackets.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure_consistency: Option<Claim>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub casimir_residual: Option<Claim>,
    pub jacobian_rank: RankClaim,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_rank: Option<RankClaim>,
    pub verdict: String,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub field: String,
    /// "no-blowup-within-horizon", "blowup-detected" or "inconclusive".
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blowup_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompletenessStage {
    pub horizon: f64,
    pub bound: f64,
    pub base_point: Vec<f64>,
    pub probes: Vec<ProbeRecord>,
    /// Fixed wording: the probe is a bounded-horizon witness, not a proof.
    pub heuristic: String,
}

pub const COMPLETENESS_HEURISTIC: &str =
    "bounded-horizon witness only: absence of blow-up within the horizon does not prove completeness";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeStage {
    /// Names of the fields whose flows span the fiber.
    pub legs: Vec<String>,
    pub m: usize,
    pub h: usize,
    /// Fiber classification R^(m-h) x T^h.
    pub fiber: String,
    pub base_point: Vec<f64>,
    pub search_radius: f64,
    pub basis: Vec<Vec<f64>>,
    pub residuals: Vec<Claim>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionAngleStage {
    pub base_point: Vec<f64>,
    pub action: f64,
    pub period: f64,
    pub loop_points: usize,
    /// Which chart outputs are angles (wrap mod 2*pi).
    pub angular: Vec<bool>,
    pub darboux_residual: Claim,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectionStage {
    pub frame: Vec<String>,
    pub samples: usize,
    pub curvature: Claim,
    pub torsion_vs_bracket: Claim,
    pub geodesic: Claim,
    pub holonomy_return: Claim,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_match: Option<Claim>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopologyInfo {
    pub base: String,
    pub simply_connected: String,
    pub h2_zero: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi2_zero: Option<String>,
    /// "declared" for user input, "derived" when implied by a box image.
    pub provenance: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictStage {
    pub mode: String,
    pub structure_group: String,
    pub applicable: String,
    /// "true" or "unknown"; never "false".
    pub trivial: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub splitting: Option<String>,
    pub unmet: Vec<String>,
    pub diagnostics: Vec<String>,
    pub topology: TopologyInfo,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stages {
    pub bracket: Stage<BracketStage>,
    pub completeness: Stage<CompletenessStage>,
    pub lattice: Stage<LatticeStage>,
    pub action_angle: Stage<ActionAngleStage>,
    pub connection: Stage<ConnectionStage>,
    pub verdict: Stage<VerdictStage>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub tool: ToolInfo,
    /// Unix seconds at generation; volatile.
    pub generated_at: u64,
    pub system: SystemInfo,
    pub stages: Stages,
    pub exit_code: i32,
}

impl Report {
    /// Exit contract: 2 when any stage failed, else 3 when any stage is
    /// inconclusive or errored out, else 0. Skipped stages carry no vote.
    pub fn exit_code_for(stages: &Stages) -> i32 {
        let all = [
            stages.bracket.status,
            stages.completeness.status,
            stages.lattice.status,
            stages.action_angle.status,
            stages.connection.status,
            stages.verdict.status,
        ];
        if all.contains(&Status::Failed) {
            2
        } else if all.contains(&Status::Inconclusive) || all.contains(&Status::Error) {
            3
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Copy with the volatile fields cleared, for byte comparisons.
    pub fn normalized(&self) -> Report {
        let mut r = self.clone();
        r.generated_at = 0;
        for s in [
            &mut r.stages.bracket.seconds,
            &mut r.stages.completeness.seconds,
            &mut r.stages.lattice.seconds,
            &mut r.stages.action_angle.seconds,
            &mut r.stages.connection.seconds,
            &mut r.stages.verdict.seconds,
        ] {
            *s = 0.0;
        }
        r
    }
}

/// Human-readable description of [`Report`]'s JSON layout, printed by
/// `report --schema` and enforced by [`validate`].
pub const SCHEMA: &str = r#"report document (JSON, UTF-8)

claim        object { value: number, tol: number, ok: bool }
rank_claim   object { min: int, max: int, expected: int, ok: bool }
stage(T)     object { status: "passed" | "failed" | "inconclusive" | "skipped" | "error",
                      reason?: string, seconds: number, data?: T }
             (reason present unless passed; data always present for passed stages,
              best effort otherwise; seconds is wall clock and excluded from
              determinism guarantees)

top level    object {
  tool          { name: string, version: string }
  generated_at  int (unix seconds; excluded from determinism guarantees)
  system        { name: string, dim: int, n: int, k: int,
                  expected_mode: "complete" | "partial" | "noncommutative",
                  input_sha256: string (64 hex chars), seed: int, sample_count: int }
  stages {
    bracket       stage of { kind: "involution" | "closure", samples: int,
                             involution_residual?: claim, worst_pair?: [int, int],
                             closure_residual?: claim, matched_groups?: int,
                             structure_consistency?: claim, casimir_residual?: claim,
                             jacobian_rank: rank_claim, s_rank?: rank_claim,
                             verdict: string, diagnostics: [string] }
    completeness  stage of { horizon: number, bound: number, base_point: [number],
                             probes: [{ field: string, verdict: string,
                                        blowup_t?: number, detail?: string }],
                             heuristic: string }
    lattice       stage of { legs: [string], m: int, h: int, fiber: string,
                             base_point: [number], search_radius: number,
                             basis: [[number]], residuals: [claim] }
    action_angle  stage of { base_point: [number], action: number, period: number,
                             loop_points: int, angular: [bool], darboux_residual: claim }
    connection    stage of { frame: [string], samples: int, curvature: claim,
                             torsion_vs_bracket: claim, geodesic: claim,
                             holonomy_return: claim, omega_match?: claim }
    verdict       stage of { mode: string, structure_group: string, applicable: string,
                             trivial: "true" | "unknown", splitting?: string,
                             unmet: [string], diagnostics: [string],
                             topology: { base: string, simply_connected: string,
                                         h2_zero: string, pi2_zero?: string,
                                         provenance: "declared" | "derived" } }
  }
  exit_code     int (0 pass, 2 check failed, 3 inconclusive)
}
"#;

use serde_json::Value;

fn expect_object<'a>(v: &'a Value, path: &str) -> Result<&'a serde_json::Map<String, Value>, String> {
    v.as_object().ok_or_else(|| format!("{path}: expected object"))
}

fn field<'a>(
    obj: &'a serde_json::Map<String, Value>,
    path: &str,
    key: &str,
) -> Result<&'a Value, String> {
    obj.get(key).ok_or_else(|| format!("{path}.{key}: missing"))
}

fn check_kind(v: &Value, path: &str, kind: &str) -> Result<(), String> {
    let ok = match kind {
        "string" => v.is_string(),
        "number" => v.is_number(),
        "int" => v.is_u64() || v.is_i64(),
        "bool" => v.is_boolean(),
        _ => unreachable!(),
    };
    if ok {
        Ok(())
    } else {
        Err(format!("{path}: expected {kind}"))
    }
}

fn check_claim(v: &Value, path: &str) -> Result<(), String> {
    let obj = expect_object(v, path)?;
    check_kind(field(obj, path, "value")?, &format!("{path}.value"), "number")?;
    check_kind(field(obj, path, "tol")?, &format!("{path}.tol"), "number")?;
    check_kind(field(obj, path, "ok")?, &format!("{path}.ok"), "bool")
}

fn check_rank_claim(v: &Value, path: &str) -> Result<(), String> {
    let obj = expect_object(v, path)?;
    for key in ["min", "max", "expected"] {
        check_kind(field(obj, path, key)?, &format!("{path}.{key}"), "int")?;
    }
    check_kind(field(obj, path, "ok")?, &format!("{path}.ok"), "bool")
}

fn check_string_array(v: &Value, path: &str) -> Result<(), String> {
    let arr = v.as_array().ok_or_else(|| format!("{path}: expected array"))?;
    for (i, s) in arr.iter().enumerate() {
        check_kind(s, &format!("{path}[{i}]"), "string")?;
    }
    Ok(())
}

fn check_number_array(v: &Value, path: &str) -> Result<(), String> {
    let arr = v.as_array().ok_or_else(|| format!("{path}: expected array"))?;
    for (i, s) in arr.iter().enumerate() {
        check_kind(s, &format!("{path}[{i}]"), "number")?;
    }
    Ok(())
}

fn check_stage<F>(v: &Value, path: &str, check_data: F) -> Result<(), String>
where
    F: Fn(&Value, &str) -> Result<(), String>,
{
    let obj = expect_object(v, path)?;
    let status = field(obj, path, "status")?
        .as_str()
        .ok_or_else(|| format!("{path}.status: expected string"))?;
    if !["passed", "failed", "inconclusive", "skipped", "error"].contains(&status) {
        return Err(format!("{path}.status: unknown value `{status}`"));
    }
    if status != "passed" && !obj.contains_key("reason") {
        return Err(format!("{path}.reason: required when status is {status}"));
    }
    if let Some(reason) = obj.get("reason") {
        check_kind(reason, &format!("{path}.reason"), "string")?;
    }
    check_kind(field(obj, path, "seconds")?, &format!("{path}.seconds"), "number")?;
    if let Some(data) = obj.get("data") {
        check_data(data, &format!("{path}.data"))?;
    } else if status == "passed" {
        return Err(format!("{path}.data: required when status is {status}"));
    }
    Ok(())
}

fn check_bracket(v: &Value, path: &str) -> Result<(), String> {
    let obj = expect_object(v, path)?;
    let kind = field(obj, path, "kind")?
        .as_str()
        .ok_or_else(|| format!("{path}.kind: expected string"))?;
    if !["involution", "closure"].contains(&kind) {
        return Err(format!("{path}.kind: unknown value `{kind}`"));
    }
    check_kind(field(obj, path, "samples")?, &format!("{path}.samples"), "int")?;
    for key in [
        "involution_residual",
        "closure_residual",
        "structure_consistency",
        "casimir_residual",
    ] {
        if let Some(c) = obj.get(key) {
            check_claim(c, &format!("{path}.{key}"))?;
        }
    }
    if let Some(p) = obj.get("worst_pair") {
        check_number_array(p, &format!("{path}.worst_pair"))?;
    }
    if let Some(m) = obj.get("matched_groups") {
        check_kind(m, &format!("{path}.matched_groups"), "int")?;
    }
    check_rank_claim(field(obj, path, "jacobian_rank")?, &format!("{path}.jacobian_rank"))?;
    if let Some(s) = obj.get("s_rank") {
        check_rank_claim(s, &format!("{path}.s_rank"))?;
    }
    check_kind(field(obj, path, "verdict")?, &format!("{path}.verdict"), "string")?;
    check_string_array(field(obj, path, "diagnostics")?, &format!("{path}.diagnostics"))
}

fn check_completeness(v: &Value, path: &str) -> Result<(), String> {
    let obj = expect_object(v, path)?;
    check_kind(field(obj, path, "horizon")?, &format!("{path}.horizon"), "number")?;
    check_kind(field(obj, path, "bound")?, &format!("{path}.bound"), "number")?;
    check_number_array(field(obj, path, "base_point")?, &format!("{path}.base_point"))?;
    let probes = field(obj, path, "probes")?
        .as_array()
        .ok_or_else(|| format!("{path}.probes: expected array"))?;
    for (i, p) in probes.iter().enumerate() {
        let pp = format!("{path}.probes[{i}]");
        let po = expect_object(p, &pp)?;
        check_kind(field(po, &pp, "field")?, &format!("{pp}.field"), "string")?;
        check_kind(field(po, &pp, "verdict")?, &format!("{pp}.verdict"), "string")?;
        if let Some(t) = po.get("blowup_t") {
            check_kind(t, &format!("{pp}.blowup_t"), "number")?;
        }
    }
    check_kind(field(obj, path, "heuristic")?, &format!("{path}.heuristic"), "string")
}

fn check_lattice(v: &Value, path: &str) -> Result<(), String> {
    let obj = expect_object(v, path)?;
    check_string_array(field(obj, path, "legs")?, &format!("{path}.legs"))?;
    check_kind(field(obj, path, "m")?, &format!("{path}.m"), "int")?;
    check_kind(field(obj, path, "h")?, &format!("{path}.h"), "int")?;
    check_kind(field(obj, path, "fiber")?, &format!("{path}.fiber"), "string")?;
    check_number_array(field(obj, path, "base_point")?, &format!("{path}.base_point"))?;
    check_kind(
        field(obj, path, "search_radius")?,
        &format!("{path}.search_radius"),
        "number",
    )?;
    let basis = field(obj, path, "basis")?
        .as_array()
        .ok_or_else(|| format!("{path}.basis: expected array"))?;
    for (i, b) in basis.iter().enumerate() {
        check_number_array(b, &format!("{path}.basis[{i}]"))?;
    }
    let residuals = field(obj, path, "residuals")?
        .as_array()
        .ok_or_else(|| format!("{path}.residuals: expected array"))?;
    for (i, r) in residuals.iter().enumerate() {
        check_claim(r, &format!("{path}.residuals[{i}]"))?;
    }
    Ok(())
}

fn check_action_angle(v: &Value, path: &str) -> Result<(), String> {
    let obj = expect_object(v, path)?;
    check_number_array(field(obj, path, "base_point")?, &format!("{path}.base_point"))?;
    check_kind(field(obj, path, "action")?, &format!("{path}.action"), "number")?;
    check_kind(field(obj, path, "period")?, &format!("{path}.period"), "number")?;
    check_kind(field(obj, path, "loop_points")?, &format!("{path}.loop_points"), "int")?;
    let angular = field(obj, path, "angular")?
        .as_array()
        .ok_or_else(|| format!("{path}.angular: expected array"))?;
    for (i, a) in angular.iter().enumerate() {
        check_kind(a, &format!("{path}.angular[{i}]"), "bool")?;
    }
    check_claim(
        field(obj, path, "darboux_residual")?,
        &format!("{path}.darboux_residual"),
    )
}

fn check_connection(v: &Value, path: &str) -> Result<(), String> {
    let obj = expect_object(v, path)?;
    check_string_array(field(obj, path, "frame")?, &format!("{path}.frame"))?;
    check_kind(field(obj, path, "samples")?, &format!("{path}.samples"), "int")?;
    for key in ["curvature", "torsion_vs_bracket", "geodesic", "holonomy_return"] {
        check_claim(field(obj, path, key)?, &format!("{path}.{key}"))?;
    }
    if let Some(c) = obj.get("omega_match") {
        check_claim(c, &format!("{path}.omega_match"))?;
    }
    Ok(())
}

fn check_verdict(v: &Value, path: &str) -> Result<(), String> {
    let obj = expect_object(v, path)?;
    for key in ["mode", "structure_group", "applicable"] {
        check_kind(field(obj, path, key)?, &format!("{path}.{key}"), "string")?;
    }
    let trivial = field(obj, path, "trivial")?
        .as_str()
        .ok_or_else(|| format!("{path}.trivial: expected string"))?;
    if !["true", "unknown"].contains(&trivial) {
        return Err(format!("{path}.trivial: got `{trivial}`, never \"false\""));
    }
    if let Some(s) = obj.get("splitting") {
        check_kind(s, &format!("{path}.splitting"), "string")?;
    }
    check_string_array(field(obj, path, "unmet")?, &format!("{path}.unmet"))?;
    check_string_array(field(obj, path, "diagnostics")?, &format!("{path}.diagnostics"))?;
    let tp = format!("{path}.topology");
    let topo = expect_object(field(obj, path, "topology")?, &tp)?;
    for key in ["base", "simply_connected", "h2_zero"] {
        check_kind(field(topo, &tp, key)?, &format!("{tp}.{key}"), "string")?;
    }
    if let Some(p) = topo.get("pi2_zero") {
        check_kind(p, &format!("{tp}.pi2_zero"), "string")?;
    }
    let prov = field(topo, &tp, "provenance")?
        .as_str()
        .ok_or_else(|| format!("{tp}.provenance: expected string"))?;
    if !["declared", "derived"].contains(&prov) {
        return Err(format!("{tp}.provenance: unknown value `{prov}`"));
    }
    Ok(())
}

/// Validate a parsed report document against [`SCHEMA`].
pub fn validate(v: &Value) -> Result<(), String> {
    let root = expect_object(v, "report")?;
    let tool = expect_object(field(root, "report", "tool")?, "tool")?;
    check_kind(field(tool, "tool", "name")?, "tool.name", "string")?;
    check_kind(field(tool, "tool", "version")?, "tool.version", "string")?;
    check_kind(field(root, "report", "generated_at")?, "generated_at", "int")?;

    let system = expect_object(field(root, "report", "system")?, "system")?;
    check_kind(field(system, "system", "name")?, "system.name", "string")?;
    for key in ["dim", "n", "k", "seed", "sample_count"] {
        check_kind(field(system, "system", key)?, &format!("system.{key}"), "int")?;
    }
    let mode = field(system, "system", "expected_mode")?
        .as_str()
        .ok_or("system.expected_mode: expected string")?;
    if !["complete", "partial", "noncommutative"].contains(&mode) {
        return Err(format!("system.expected_mode: unknown value `{mode}`"));
    }
    let hash = field(system, "system", "input_sha256")?
        .as_str()
        .ok_or("system.input_sha256: expected string")?;
    if hash.len() != 64 || !hash.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err("system.input_sha256: expected 64 hex chars".into());
    }

    let stages = expect_object(field(root, "report", "stages")?, "stages")?;
    check_stage(field(stages, "stages", "bracket")?, "stages.bracket", check_bracket)?;
    check_stage(
        field(stages, "stages", "completeness")?,
        "stages.completeness",
        check_completeness,
    )?;
    check_stage(field(stages, "stages", "lattice")?, "stages.lattice", check_lattice)?;
    check_stage(
        field(stages, "stages", "action_angle")?,
        "stages.action_angle",
        check_action_angle,
    )?;
    check_stage(
        field(stages, "stages", "connection")?,
        "stages.connection",
        check_connection,
    )?;
    check_stage(field(stages, "stages", "verdict")?, "stages.verdict", check_verdict)?;

    let code = field(root, "report", "exit_code")?
        .as_i64()
        .ok_or("exit_code: expected int")?;
    if ![0, 2, 3].contains(&code) {
        return Err(format!("exit_code: {code} outside the report contract"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> Report {
        Report {
            tool: ToolInfo {
                name: TOOL_NAME.into(),
                version: tool_version().into(),
            },
            generated_at: 1,
            system: SystemInfo {
                name: "oscillator".into(),
                dim: 2,
                n: 1,
                k: 1,
                expected_mode: "complete".into(),
                input_sha256: input_sha256("x"),
                seed: 0,
                sample_count: 100,
            },
            stages: Stages {
                bracket: Stage {
                    status: Status::Passed,
                    reason: None,
                    seconds: 0.5,
                    data: Some(BracketStage {
                        kind: "involution".into(),
                        samples: 100,
                        involution_residual: Some(Claim::residual(1e-14, 1e-10)),
                        worst_pair: None,
                        closure_residual: None,
                        matched_groups: None,
                        structure_consistency: None,
                        casimir_residual: None,
                        jacobian_rank: RankClaim::exact((1, 1), 1),
                        s_rank: None,
                        verdict: "complete(1)".into(),
                        diagnostics: vec![],
                    }),
                },
                completeness: Stage {
                    status: Status::Passed,
                    reason: None,
                    seconds: 0.1,
                    data: Some(CompletenessStage {
                        horizon: 100.0,
                        bound: 1e8,
                        base_point: vec![1.0, 0.0],
                        probes: vec![ProbeRecord {
                            field: "H".into(),
                            verdict: "no-blowup-within-horizon".into(),
                            blowup_t: None,
                            detail: None,
                        }],
                        heuristic: COMPLETENESS_HEURISTIC.into(),
                    }),
                },
                lattice: Stage {
                    status: Status::Passed,
                    reason: None,
                    seconds: 1.0,
                    data: Some(LatticeStage {
                        legs: vec!["H".into()],
                        m: 1,
                        h: 1,
                        fiber: "T^1".into(),
                        base_point: vec![1.0, 0.0],
                        search_radius: 7.0,
                        basis: vec![vec![6.283185307179586]],
                        residuals: vec![Claim::residual(1e-11, 1e-8)],
                    }),
                },
                action_angle: Stage::skipped("disabled in the spec"),
                connection: Stage::skipped("disabled in the spec"),
                verdict: Stage {
                    status: Status::Passed,
                    reason: None,
                    seconds: 0.0,
                    data: Some(VerdictStage {
                        mode: "complete(1)".into(),
                        structure_group: "T^1".into(),
                        applicable: "global complete integrability".into(),
                        trivial: "true".into(),
                        splitting: None,
                        unmet: vec![],
                        diagnostics: vec![],
                        topology: TopologyInfo {
                            base: "interval".into(),
                            simply_connected: "true".into(),
                            h2_zero: "true".into(),
                            pi2_zero: Some("true".into()),
                            provenance: "derived".into(),
                        },
                    }),
                },
            },
            exit_code: 0,
        }
    }

    #[test]
    fn sample_report_validates() {
        let r = sample_report();
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        validate(&v).unwrap();
    }

    #[test]
    fn missing_field_is_rejected() {
        let r = sample_report();
        let mut v: Value = serde_json::from_str(&r.to_json()).unwrap();
        v.as_object_mut().unwrap().remove("system");
        let err = validate(&v).unwrap_err();
        assert!(err.contains("system"), "{err}");
    }

    #[test]
    fn trivial_false_is_rejected() {
        let r = sample_report();
        let mut v: Value = serde_json::from_str(&r.to_json()).unwrap();
        v["stages"]["verdict"]["data"]["trivial"] = Value::String("false".into());
        let err = validate(&v).unwrap_err();
        assert!(err.contains("never"), "{err}");
    }

    #[test]
    fn failed_stage_requires_reason() {
        let r = sample_report();
        let mut v: Value = serde_json::from_str(&r.to_json()).unwrap();
        v["stages"]["bracket"]["status"] = Value::String("failed".into());
        let err = validate(&v).unwrap_err();
        assert!(err.contains("reason"), "{err}");
    }

    #[test]
    fn exit_code_precedence() {
        let mut r = sample_report();
        assert_eq!(Report::exit_code_for(&r.stages), 0);
        r.stages.action_angle.status = Status::Inconclusive;
        assert_eq!(Report::exit_code_for(&r.stages), 3);
        r.stages.bracket.status = Status::Failed;
        assert_eq!(Report::exit_code_for(&r.stages), 2);
    }

    #[test]
    fn normalization_clears_volatiles_only() {
        let r = sample_report();
        let n = r.normalized();
        assert_eq!(n.generated_at, 0);
        assert_eq!(n.stages.bracket.seconds, 0.0);
        assert_eq!(n.stages.lattice.seconds, 0.0);
        assert_eq!(n.system.input_sha256, r.system.input_sha256);
        let twice = r.normalized().to_json();
        assert_eq!(n.to_json(), twice);
    }

    #[test]
    fn hash_is_stable_hex() {
        let h = input_sha256("abc");
        assert_eq!(h.len(), 64);
        assert_eq!(
            h,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
