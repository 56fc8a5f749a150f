//! Sandboxed mock machines.
//!
//! Nothing here touches the network. All file output lands under the sandbox
//! root: `outbox/*.eml`, `files/**` and `payments/refunds.csv`.

use super::registry::{EffectMachine, EffectRegistry, RegistryError, Shape};
use idc_core::{canonical_serialize, sha256, Value, ValueMap};
use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex};
use thiserror::Error;

pub const EMAIL_SEND: &str = "@stdlib/email/send";
pub const HTTP_GET: &str = "@stdlib/http/get";
pub const FILE_WRITE: &str = "@stdlib/file/write";
pub const FILE_READ: &str = "@stdlib/file/read";
pub const KV_PUT: &str = "@stdlib/kv/put";
pub const KV_GET: &str = "@stdlib/kv/get";
pub const PAYMENT_REFUND: &str = "@stdlib/payment/refund";

/// Builtin machine ids with their action paths.
pub const BUILTIN_MACHINES: [(&str, &str); 7] = [
    (EMAIL_SEND, "email.send"),
    (HTTP_GET, "http.get"),
    (FILE_WRITE, "file.write"),
    (FILE_READ, "file.read"),
    (KV_PUT, "kv.put"),
    (KV_GET, "kv.get"),
    (PAYMENT_REFUND, "payment.refund"),
];

#[derive(Debug, Error)]
pub enum SetupError {
    #[error("sandbox setup: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

/// Canned HTTP responses keyed by URL.
pub type HttpFixtures = BTreeMap<String, Value>;

/// 16 hex digits derived from the canonical encoding of `params`.
pub fn params_id(params: &ValueMap) -> String {
    let bytes = canonical_serialize(&Value::Map(params.clone())).expect("intent params are bounded");
    sha256(&bytes).to_hex()[..16].to_string()
}

fn str_param<'a>(params: &'a ValueMap, name: &str) -> &'a str {
    params.get(name).and_then(Value::as_str).expect("validated by the registry")
}

/// Resolves a sandbox-relative path, refusing anything that could leave `base`.
pub fn confine(base: &Path, rel: &str) -> Result<PathBuf, String> {
    const ESCAPE: &str = "path escapes sandbox";
    if rel.is_empty() || rel.contains('\0') || rel.starts_with(['/', '\\']) {
        return Err(ESCAPE.into());
    }
    let mut out = base.to_path_buf();
    for component in Path::new(rel).components() {
        match component {
            Component::Normal(part) => out.push(part),
            Component::CurDir => {}
            Component::ParentDir | Component::RootDir | Component::Prefix(_) => return Err(ESCAPE.into()),
        }
    }
    if out == base {
        return Err("path names the sandbox itself".into());
    }
    // Symlinks planted inside the sandbox must not lead out of it.
    let canonical_base = base.canonicalize().map_err(|e| e.to_string())?;
    let mut probe = out.clone();
    while !probe.exists() {
        if !probe.pop() {
            break;
        }
    }
    let canonical_probe = probe.canonicalize().map_err(|e| e.to_string())?;
    if !canonical_probe.starts_with(&canonical_base) {
        return Err(ESCAPE.into());
    }
    if fs::symlink_metadata(&out).is_ok_and(|m| m.file_type().is_symlink()) {
        return Err(ESCAPE.into());
    }
    Ok(out)
}

/// A registry holding the seven builtin machines, sandboxed under `sandbox_root`.
pub fn register_builtin_machines(sandbox_root: &Path) -> Result<EffectRegistry, SetupError> {
    let mut registry = EffectRegistry::new();
    install_builtin_machines(&mut registry, sandbox_root, HttpFixtures::new())?;
    Ok(registry)
}

/// Adds the builtin machines to `registry`. Machines whose action path the
/// registry's namespace allowlist rejects are skipped; their ids are returned.
pub fn install_builtin_machines(
    registry: &mut EffectRegistry,
    sandbox_root: &Path,
    fixtures: HttpFixtures,
) -> Result<Vec<String>, SetupError> {
    let root = sandbox_root.to_path_buf();
    let outbox = root.join("outbox");
    let files = root.join("files");
    let payments = root.join("payments");
    for dir in [&outbox, &files, &payments] {
        fs::create_dir_all(dir)?;
    }

    let kv: Arc<Mutex<BTreeMap<String, Value>>> = Arc::default();
    let refunds_lock = Arc::new(Mutex::new(()));
    let fixtures = Arc::new(fixtures);

    let machines = vec![
        EffectMachine::new(
            EMAIL_SEND,
            "email.send",
            &[("to", Shape::Str), ("subject", Shape::Str), ("body", Shape::Str)],
            move |p| {
                let id = params_id(p);
                let message = format!(
                    "To: {}\r\nSubject: {}\r\nMessage-Id: <{id}@idc.sandbox>\r\n\r\n{}\r\n",
                    str_param(p, "to"),
                    str_param(p, "subject"),
                    str_param(p, "body")
                );
                fs::write(outbox.join(format!("{id}.eml")), message).map_err(|e| e.to_string())?;
                Ok(Value::map([("sent", Value::Bool(true)), ("message_id", Value::Str(id))]))
            },
        ),
        EffectMachine::new(HTTP_GET, "http.get", &[("url", Shape::Str)], move |p| {
            let url = str_param(p, "url");
            fixtures.get(url).cloned().ok_or_else(|| format!("no fixture for {url}"))
        }),
        {
            let files = files.clone();
            EffectMachine::new(FILE_WRITE, "file.write", &[("path", Shape::Str), ("content", Shape::Str)], move |p| {
                let target = confine(&files, str_param(p, "path"))?;
                if let Some(parent) = target.parent() {
                    fs::create_dir_all(parent).map_err(|e| e.to_string())?;
                }
                let target = confine(&files, str_param(p, "path"))?;
                let content = str_param(p, "content");
                fs::write(&target, content).map_err(|e| e.to_string())?;
                Ok(Value::map([("written", Value::Bool(true)), ("bytes", Value::Int(content.len() as i64))]))
            })
        },
        EffectMachine::new(FILE_READ, "file.read", &[("path", Shape::Str)], move |p| {
            let target = confine(&files, str_param(p, "path"))?;
            let content = fs::read_to_string(&target).map_err(|e| match e.kind() {
                io::ErrorKind::NotFound => format!("no such file {}", str_param(p, "path")),
                _ => e.to_string(),
            })?;
            Ok(Value::map([("content", Value::Str(content))]))
        }),
        {
            let kv = kv.clone();
            EffectMachine::new(KV_PUT, "kv.put", &[("key", Shape::Str), ("value", Shape::Any)], move |p| {
                let mut store = kv.lock().map_err(|_| "kv store poisoned".to_string())?;
                store.insert(str_param(p, "key").to_string(), p["value"].clone());
                Ok(Value::map([("stored", Value::Bool(true))]))
            })
        },
        EffectMachine::new(KV_GET, "kv.get", &[("key", Shape::Str)], move |p| {
            let store = kv.lock().map_err(|_| "kv store poisoned".to_string())?;
            Ok(store.get(str_param(p, "key")).cloned().unwrap_or(Value::Unit))
        }),
        EffectMachine::new(
            PAYMENT_REFUND,
            "payment.refund",
            &[("request_id", Shape::Str), ("customer_id", Shape::Str), ("amount_cents", Shape::Int)],
            move |p| {
                let amount = p["amount_cents"].as_int().expect("validated");
                if amount <= 0 {
                    return Err(format!("refund amount must be positive, got {amount}"));
                }
                let refund_id = params_id(p);
                let _guard = refunds_lock.lock().map_err(|_| "refund log poisoned".to_string())?;
                let path = payments.join("refunds.csv");
                let fresh = fs::metadata(&path).map_or(true, |m| m.len() == 0);
                let file = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| e.to_string())?;
                let mut w = csv::Writer::from_writer(file);
                if fresh {
                    w.write_record(["request_id", "customer_id", "amount_cents", "refund_id"])
                        .map_err(|e| e.to_string())?;
                }
                w.write_record([
                    str_param(p, "request_id"),
                    str_param(p, "customer_id"),
                    &amount.to_string(),
                    &refund_id,
                ])
                .map_err(|e| e.to_string())?;
                w.flush().map_err(|e| e.to_string())?;
                Ok(Value::map([
                    ("refunded", Value::Bool(true)),
                    ("refund_id", Value::Str(refund_id)),
                    ("amount_cents", Value::Int(amount)),
                ]))
            },
        ),
    ];

    let mut skipped = Vec::new();
    for machine in machines {
        if !registry.action_allowed(&machine.action_path) {
            skipped.push(machine.machine_id);
            continue;
        }
        registry.register(machine)?;
    }
    Ok(skipped)
}

/// Reads a JSON object of URL to response value.
pub fn load_http_fixtures(path: &Path) -> Result<HttpFixtures, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    match value {
        Value::Map(m) => Ok(m),
        other => Err(format!("{}: fixtures must be a JSON object, got {}", path.display(), other.type_name())),
    }
}
