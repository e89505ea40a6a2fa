//! JSON instance files and machine-readable reports.
//!
//! Instance files carry a `schema_version` (currently 1) and a `kind`:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "kind": "svtcp",
//!   "family": {
//!     "base": { "order": 3, "dim": 2, "entries": [] },
//!     "coeffs": [{ "order": 3, "dim": 2,
//!                  "entries": [{ "idx": [1, 1, 1], "val": 1.0 },
//!                              { "idx": [2, 2, 2], "val": 1.0 }] }]
//!   },
//!   "rhs": { "base": [1.0, 1.0], "coeffs": [] },
//!   "omega": {
//!     "omega_dim": 1,
//!     "pieces": [{ "predicate": { "type": "point_match", "point": [1.0, 0.0], "tol": 1e-9 },
//!                  "omegas": [[0.0], [1.0]] }],
//!     "default": [[0.0]],
//!     "limit_set": "auto"
//!   }
//! }
//! ```
//!
//! A `tensor` file has a single `tensor` field; a `tcp` file has `tensor`
//! and `p`. Tensor indices are 1-based in files and 0-based in memory.
//!
//! Canonical output sorts tensor coordinates, omits zero entries and writes
//! every float with 17 significant digits, so `save(load(f))` is a fixed
//! point and digests are stable.

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::svtcp::{LimitSet, OmegaMap, Piece, Predicate, SvtcpInstance, TensorFamily, VectorFamily};
use crate::tcp::TcpInstance;
use crate::tensor::DenseTensor;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Tensor,
    Tcp,
    Svtcp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Tensor(DenseTensor),
    Tcp(TcpInstance),
    Svtcp(SvtcpInstance),
}

impl Instance {
    pub fn kind(&self) -> InstanceKind {
        match self {
            Instance::Tensor(_) => InstanceKind::Tensor,
            Instance::Tcp(_) => InstanceKind::Tcp,
            Instance::Svtcp(_) => InstanceKind::Svtcp,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Instance::Tensor(b) => b.dim(),
            Instance::Tcp(t) => t.dim(),
            Instance::Svtcp(s) => s.dim(),
        }
    }
}

// ---------------------------------------------------------------------------
// file schema

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    schema_version: u64,
    kind: InstanceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tensor: Option<RawTensor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    family: Option<RawFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rhs: Option<RawRhs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega: Option<RawOmega>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTensor {
    order: usize,
    dim: usize,
    entries: Vec<RawEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    idx: Vec<usize>,
    val: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    base: RawTensor,
    #[serde(default)]
    coeffs: Vec<RawTensor>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRhs {
    base: Vec<f64>,
    #[serde(default)]
    coeffs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOmega {
    omega_dim: usize,
    #[serde(default)]
    pieces: Vec<Piece>,
    #[serde(default)]
    default: Vec<Vec<f64>>,
    #[serde(default)]
    limit_set: RawLimit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawLimit {
    Keyword(String),
    Declared(Vec<Vec<f64>>),
}

impl Default for RawLimit {
    fn default() -> Self {
        RawLimit::Keyword("auto".into())
    }
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

fn require<T>(field: Option<T>, path: &str) -> Result<T> {
    field.ok_or_else(|| invalid(path, "missing field"))
}

fn forbid<T>(field: &Option<T>, path: &str, kind: &str) -> Result<()> {
    match field {
        Some(_) => Err(invalid(path, format!("not allowed for kind `{kind}`"))),
        None => Ok(()),
    }
}

fn finite_vec(v: &[f64], path: &str) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(invalid(format!("{path}[{i}]"), "non-finite value")),
        None => Ok(()),
    }
}

fn tensor_from_raw(raw: &RawTensor, path: &str) -> Result<DenseTensor> {
    if raw.order < 2 {
        return Err(invalid(format!("{path}.order"), "order must be at least 2"));
    }
    let mut tensor = DenseTensor::zeros(raw.order, raw.dim)
        .map_err(|e| invalid(format!("{path}.order"), e.to_string()))?;
    let mut seen = BTreeSet::new();
    let mut data = tensor.entries().to_vec();
    for (k, entry) in raw.entries.iter().enumerate() {
        let epath = format!("{path}.entries[{k}]");
        if entry.idx.len() != raw.order {
            return Err(invalid(
                format!("{epath}.idx"),
                format!("expected {} indices, found {}", raw.order, entry.idx.len()),
            ));
        }
        if let Some(bad) = entry.idx.iter().find(|&&i| i == 0 || i > raw.dim) {
            return Err(invalid(
                format!("{epath}.idx"),
                format!("index {bad} outside 1..={}", raw.dim),
            ));
        }
        if !entry.val.is_finite() {
            return Err(invalid(format!("{epath}.val"), "non-finite value"));
        }
        if !seen.insert(entry.idx.clone()) {
            return Err(invalid(format!("{epath}.idx"), "duplicate coordinate"));
        }
        let offset = entry.idx.iter().fold(0, |acc, &i| acc * raw.dim + (i - 1));
        data[offset] = entry.val;
    }
    tensor = DenseTensor::from_vec(raw.order, raw.dim, data).map_err(|e| invalid(path, e.to_string()))?;
    Ok(tensor)
}

fn tensor_to_raw(b: &DenseTensor) -> RawTensor {
    RawTensor {
        order: b.order(),
        dim: b.dim(),
        entries: b
            .nonzeros()
            .map(|(idx, val)| RawEntry {
                idx: idx.iter().map(|i| i + 1).collect(),
                val,
            })
            .collect(),
    }
}

fn vector_of_dim(v: &[f64], dim: usize, path: &str) -> Result<()> {
    if v.len() != dim {
        return Err(invalid(path, format!("expected length {dim}, found {}", v.len())));
    }
    finite_vec(v, path)
}

fn omega_from_raw(raw: &RawOmega, dim: usize) -> Result<OmegaMap> {
    let k = raw.omega_dim;
    let check_omegas = |set: &[Vec<f64>], path: &str| -> Result<()> {
        for (i, w) in set.iter().enumerate() {
            vector_of_dim(w, k, &format!("{path}[{i}]"))?;
        }
        Ok(())
    };
    for (i, piece) in raw.pieces.iter().enumerate() {
        let path = format!("omega.pieces[{i}]");
        check_omegas(&piece.omegas, &format!("{path}.omegas"))?;
        match &piece.predicate {
            Predicate::PointMatch { point, tol } => {
                vector_of_dim(point, dim, &format!("{path}.predicate.point"))?;
                if !(tol.is_finite() && *tol >= 0.0) {
                    return Err(invalid(format!("{path}.predicate.tol"), "must be finite and >= 0"));
                }
            }
            Predicate::ConeMatch {
                direction,
                angular_tol,
            } => {
                vector_of_dim(direction, dim, &format!("{path}.predicate.direction"))?;
                if direction.iter().all(|&x| x == 0.0) {
                    return Err(invalid(format!("{path}.predicate.direction"), "must be nonzero"));
                }
                if !(angular_tol.is_finite() && *angular_tol >= 0.0) {
                    return Err(invalid(
                        format!("{path}.predicate.angular_tol"),
                        "must be finite and >= 0",
                    ));
                }
            }
            Predicate::NonnegOrthant | Predicate::All => {}
        }
    }
    check_omegas(&raw.default, "omega.default")?;
    let limit = match &raw.limit_set {
        RawLimit::Keyword(s) if s == "auto" => LimitSet::Auto,
        RawLimit::Keyword(s) => {
            return Err(invalid("omega.limit_set", format!("expected \"auto\" or a list, found {s:?}")))
        }
        RawLimit::Declared(set) => {
            check_omegas(set, "omega.limit_set")?;
            LimitSet::Declared(set.clone())
        }
    };
    OmegaMap::new(k, raw.pieces.clone(), raw.default.clone(), limit)
        .map_err(|e| invalid("omega", e.to_string()))
}

fn omega_to_raw(map: &OmegaMap) -> RawOmega {
    RawOmega {
        omega_dim: map.omega_dim(),
        pieces: map.pieces().to_vec(),
        default: map.default_set().to_vec(),
        limit_set: match map.limit_set_spec() {
            LimitSet::Auto => RawLimit::default(),
            LimitSet::Declared(set) => RawLimit::Declared(set.clone()),
        },
    }
}

fn from_raw(raw: RawFile) -> Result<Instance> {
    if raw.schema_version != SCHEMA_VERSION {
        return Err(Error::UnsupportedSchema(raw.schema_version));
    }
    match raw.kind {
        InstanceKind::Tensor => {
            for (f, p) in [(raw.p.is_some(), "p"), (raw.family.is_some(), "family"), (raw.rhs.is_some(), "rhs"), (raw.omega.is_some(), "omega")] {
                forbid(&f.then_some(()), p, "tensor")?;
            }
            let t = require(raw.tensor.as_ref(), "tensor")?;
            Ok(Instance::Tensor(tensor_from_raw(t, "tensor")?))
        }
        InstanceKind::Tcp => {
            for (f, p) in [(raw.family.is_some(), "family"), (raw.rhs.is_some(), "rhs"), (raw.omega.is_some(), "omega")] {
                forbid(&f.then_some(()), p, "tcp")?;
            }
            let b = tensor_from_raw(require(raw.tensor.as_ref(), "tensor")?, "tensor")?;
            let p = require(raw.p, "p")?;
            vector_of_dim(&p, b.dim(), "p")?;
            Ok(Instance::Tcp(TcpInstance::new(b, p)?))
        }
        InstanceKind::Svtcp => {
            forbid(&raw.tensor, "tensor", "svtcp")?;
            forbid(&raw.p, "p", "svtcp")?;
            let fam = require(raw.family.as_ref(), "family")?;
            let base = tensor_from_raw(&fam.base, "family.base")?;
            let mut coeffs = Vec::with_capacity(fam.coeffs.len());
            for (i, c) in fam.coeffs.iter().enumerate() {
                let path = format!("family.coeffs[{i}]");
                let t = tensor_from_raw(c, &path)?;
                if t.order() != base.order() || t.dim() != base.dim() {
                    return Err(invalid(path, "order and dim must match family.base"));
                }
                coeffs.push(t);
            }
            let dim = base.dim();
            let rhs = require(raw.rhs.as_ref(), "rhs")?;
            vector_of_dim(&rhs.base, dim, "rhs.base")?;
            for (i, c) in rhs.coeffs.iter().enumerate() {
                vector_of_dim(c, dim, &format!("rhs.coeffs[{i}]"))?;
            }
            let omega = omega_from_raw(require(raw.omega.as_ref(), "omega")?, dim)?;
            let k = omega.omega_dim();
            if !coeffs.is_empty() && coeffs.len() != k {
                return Err(invalid(
                    "family.coeffs",
                    format!("expected 0 or {k} coefficients, found {}", coeffs.len()),
                ));
            }
            if !rhs.coeffs.is_empty() && rhs.coeffs.len() != k {
                return Err(invalid(
                    "rhs.coeffs",
                    format!("expected 0 or {k} coefficients, found {}", rhs.coeffs.len()),
                ));
            }
            let family = TensorFamily::new(base, coeffs)?;
            let rhs = VectorFamily::new(rhs.base.clone(), rhs.coeffs.clone())?;
            Ok(Instance::Svtcp(SvtcpInstance::new(family, rhs, omega)?))
        }
    }
}

fn to_raw(inst: &Instance) -> RawFile {
    let mut raw = RawFile {
        schema_version: SCHEMA_VERSION,
        kind: inst.kind(),
        tensor: None,
        p: None,
        family: None,
        rhs: None,
        omega: None,
    };
    match inst {
        Instance::Tensor(b) => raw.tensor = Some(tensor_to_raw(b)),
        Instance::Tcp(t) => {
            raw.tensor = Some(tensor_to_raw(t.tensor()));
            raw.p = Some(t.p().to_vec());
        }
        Instance::Svtcp(s) => {
            raw.family = Some(RawFamily {
                base: tensor_to_raw(s.family().base()),
                coeffs: s.family().coeffs().iter().map(tensor_to_raw).collect(),
            });
            raw.rhs = Some(RawRhs {
                base: s.rhs().base().to_vec(),
                coeffs: s.rhs().coeffs().to_vec(),
            });
            raw.omega = Some(omega_to_raw(s.omega_map()));
        }
    }
    raw
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let raw: RawFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    from_raw(raw)
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_instance(&text)
}

pub fn to_canonical_json(inst: &Instance) -> String {
    to_canonical_string(&to_raw(inst)).expect("instance schema always serializes")
}

pub fn save_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_canonical_json(inst))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// SHA-256 of the canonical serialization, lowercase hex.
pub fn instance_digest(inst: &Instance) -> String {
    let mut hasher = Sha256::new();
    hasher.update(to_canonical_json(inst).as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

// ---------------------------------------------------------------------------
// canonical formatting

/// Pretty printer that writes every float with 17 significant digits.
struct CanonicalFormatter<'a> {
    pretty: PrettyFormatter<'a>,
}

impl Formatter for CanonicalFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(writer)
    }
}

/// Serializes with two-space indentation, 17-significant-digit floats and a
/// trailing newline.
pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let formatter = CanonicalFormatter {
        pretty: PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut out, formatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Parse(e.to_string()))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

// ---------------------------------------------------------------------------
// reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub instance_digest: String,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub result: Value,
    /// Only filled when timing is requested, so default reports stay
    /// byte-identical across runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl Report {
    pub fn to_json(&self) -> String {
        to_canonical_string(self).expect("reports always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
      "schema_version": 1,
      "kind": "svtcp",
      "family": {
        "base": {"order": 3, "dim": 2, "entries": []},
        "coeffs": [{"order": 3, "dim": 2, "entries": [
          {"idx": [2, 2, 2], "val": 1.0}, {"idx": [1, 1, 1], "val": 1.0}]}]
      },
      "rhs": {"base": [1.0, 1.0]},
      "omega": {
        "omega_dim": 1,
        "pieces": [{"predicate": {"type": "point_match", "point": [1.0, 0.0], "tol": 1e-9},
                    "omegas": [[0.0], [1.0]]}],
        "default": [[0.0]],
        "limit_set": "auto"
      }
    }"#;

    fn tensor_file(entries: &str) -> String {
        format!(
            r#"{{"schema_version": 1, "kind": "tensor",
                "tensor": {{"order": 2, "dim": 2, "entries": [{entries}]}}}}"#
        )
    }

    #[test]
    fn example_loads() {
        let Instance::Svtcp(inst) = parse_instance(EXAMPLE).unwrap() else {
            panic!("expected svtcp");
        };
        assert_eq!(inst.omega_map().candidates(), vec![vec![0.0], vec![1.0]]);
        assert_eq!(inst.family().at(&[1.0]).unwrap(), DenseTensor::unit(3, 2).unwrap());
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let inst = parse_instance(EXAMPLE).unwrap();
        let text = to_canonical_json(&inst);
        let again = parse_instance(&text).unwrap();
        assert_eq!(again, inst);
        assert_eq!(to_canonical_json(&again), text);
        // coordinates come out sorted
        let a = text.find("[\n              1,\n              1,\n              1\n").unwrap();
        let b = text.find("[\n              2,\n              2,\n              2\n").unwrap();
        assert!(a < b);
        assert!(text.contains("1.0000000000000000e0"));
    }

    #[test]
    fn floats_round_trip_exactly() {
        let p = vec![0.1, -1.0 / 3.0, 1e-300, 123_456_789.123_456_79];
        let inst = Instance::Tcp(TcpInstance::new(DenseTensor::unit(2, 4).unwrap(), p.clone()).unwrap());
        let Instance::Tcp(back) = parse_instance(&to_canonical_json(&inst)).unwrap() else {
            panic!()
        };
        assert_eq!(back.p(), &p[..]);
    }

    #[test]
    fn validation_errors_name_the_field() {
        let err = parse_instance(&tensor_file(r#"{"idx": [1, 3], "val": 1.0}"#)).unwrap_err();
        assert!(matches!(err, Error::Invalid { ref path, .. } if path == "tensor.entries[0].idx"), "{err}");
        let err = parse_instance(&tensor_file(
            r#"{"idx": [1, 2], "val": 1.0}, {"idx": [1, 2], "val": 2.0}"#,
        ))
        .unwrap_err();
        assert!(matches!(err, Error::Invalid { ref path, ref message } if path == "tensor.entries[1].idx" && message.contains("duplicate")));
        let err = parse_instance(&tensor_file(r#"{"idx": [1], "val": 1.0}"#)).unwrap_err();
        assert!(matches!(err, Error::Invalid { ref path, .. } if path == "tensor.entries[0].idx"));
        assert!(matches!(
            parse_instance(&EXAMPLE.replace("\"omegas\": [[0.0], [1.0]]", "\"omegas\": [[0.0], [1.0, 2.0]]")),
            Err(Error::Invalid { ref path, .. }) if path == "omega.pieces[0].omegas[1]"
        ));
        assert!(matches!(
            parse_instance(&EXAMPLE.replace("\"schema_version\": 1", "\"schema_version\": 2")),
            Err(Error::UnsupportedSchema(2))
        ));
        assert!(matches!(parse_instance("{"), Err(Error::Parse(_))));
        assert!(matches!(
            parse_instance(&EXAMPLE.replace("\"auto\"", "\"sometimes\"")),
            Err(Error::Invalid { ref path, .. }) if path == "omega.limit_set"
        ));
    }

    #[test]
    fn digest_is_stable_and_content_sensitive() {
        let a = parse_instance(EXAMPLE).unwrap();
        let d = instance_digest(&a);
        assert_eq!(d.len(), 64);
        assert_eq!(d, instance_digest(&parse_instance(&to_canonical_json(&a)).unwrap()));
        let b = parse_instance(&EXAMPLE.replace("\"base\": [1.0, 1.0]", "\"base\": [1.0, 2.0]")).unwrap();
        assert_ne!(d, instance_digest(&b));
    }

    #[test]
    fn report_round_trip() {
        let report = Report {
            command: "check".into(),
            instance_digest: "00".into(),
            seed: 3,
            tolerances: BTreeMap::from([("tol".to_string(), 1e-8)]),
            result: serde_json::json!({"status": "verified", "margin": 0.1, "certificate": [1.0, 0.5]}),
            wall_time_ms: None,
        };
        let text = report.to_json();
        let back = Report::from_json(&text).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.to_json(), text);
        assert!(!text.contains("wall_time_ms"));
    }

    #[test]
    fn save_and_load_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.json");
        let inst = parse_instance(EXAMPLE).unwrap();
        save_instance(&inst, &path).unwrap();
        assert_eq!(load_instance(&path).unwrap(), inst);
        assert!(matches!(load_instance(dir.path().join("missing.json")), Err(Error::Io(_))));
    }
}
