use crate::mediation::Authorization;
use idc_core::{Hash32, Intent, Value, ValueMap};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};
use thiserror::Error;

/// Expected shape of a required parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Str,
    Int,
    Bool,
    List,
    Map,
    Any,
}

impl Shape {
    pub fn admits(self, v: &Value) -> bool {
        matches!(
            (self, v),
            (Shape::Any, _)
                | (Shape::Str, Value::Str(_))
                | (Shape::Int, Value::Int(_))
                | (Shape::Bool, Value::Bool(_))
                | (Shape::List, Value::List(_))
                | (Shape::Map, Value::Map(_))
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Shape::Str => "string",
            Shape::Int => "int",
            Shape::Bool => "bool",
            Shape::List => "list",
            Shape::Map => "map",
            Shape::Any => "any",
        }
    }
}

pub type Handler = Arc<dyn Fn(&ValueMap) -> Result<Value, String> + Send + Sync>;

/// A registered realizer for one class of intents.
#[derive(Clone)]
pub struct EffectMachine {
    pub machine_id: String,
    pub action_path: String,
    pub required_params: Vec<(String, Shape)>,
    handler: Handler,
}

impl fmt::Debug for EffectMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EffectMachine")
            .field("machine_id", &self.machine_id)
            .field("action_path", &self.action_path)
            .field("required_params", &self.required_params)
            .finish_non_exhaustive()
    }
}

impl EffectMachine {
    pub fn new(
        machine_id: impl Into<String>,
        action_path: impl Into<String>,
        required_params: &[(&str, Shape)],
        handler: impl Fn(&ValueMap) -> Result<Value, String> + Send + Sync + 'static,
    ) -> Self {
        EffectMachine {
            machine_id: machine_id.into(),
            action_path: action_path.into(),
            required_params: required_params.iter().map(|(n, s)| (n.to_string(), *s)).collect(),
            handler: Arc::new(handler),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EffectError {
    #[error("unknown machine {0:?}")]
    UnknownMachine(String),
    #[error("parameter validation failed: {0}")]
    ParamValidation(String),
    #[error("handler failed: {0}")]
    HandlerFailure(String),
    #[error("authorization does not cover this intent")]
    AuthorizationMismatch,
}

impl EffectError {
    pub fn kind(&self) -> &'static str {
        match self {
            EffectError::UnknownMachine(_) => "unknown-machine",
            EffectError::ParamValidation(_) => "param-validation",
            EffectError::HandlerFailure(_) => "handler-failure",
            EffectError::AuthorizationMismatch => "authorization-mismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("machine {0:?} is already registered")]
    Duplicate(String),
    #[error("machine {0:?} needs a non-empty id and action path")]
    Empty(String),
    #[error("action {action:?} of machine {machine:?} is outside the allowed namespaces")]
    NamespaceNotAllowed { machine: String, action: String },
}

/// One call of `realize`, successful or not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub intent_hash: Hash32,
    /// Sequence number of the ledger record that authorized the call.
    pub authorizing_seq: u64,
    pub machine: String,
    pub outcome: Result<Value, EffectError>,
}

/// The set of effect machines a runtime can realize intents with.
///
/// Realization is crate-private and demands an [`Authorization`], which only
/// the mediation path can mint from an Allow record.
#[derive(Default)]
pub struct EffectRegistry {
    machines: BTreeMap<String, EffectMachine>,
    allowed_actions: Option<Vec<String>>,
    log: Mutex<Vec<Invocation>>,
}

impl fmt::Debug for EffectRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EffectRegistry")
            .field("machines", &self.machines.keys().collect::<Vec<_>>())
            .field("allowed_actions", &self.allowed_actions)
            .finish_non_exhaustive()
    }
}

impl EffectRegistry {
    pub fn new() -> Self {
        EffectRegistry::default()
    }

    /// A registry that refuses machines whose action path does not start
    /// with one of `prefixes`.
    pub fn with_action_namespaces(prefixes: Vec<String>) -> Self {
        EffectRegistry { allowed_actions: Some(prefixes), ..EffectRegistry::default() }
    }

    pub fn register(&mut self, machine: EffectMachine) -> Result<(), RegistryError> {
        if machine.machine_id.is_empty() || machine.action_path.is_empty() {
            return Err(RegistryError::Empty(machine.machine_id));
        }
        if !self.action_allowed(&machine.action_path) {
            return Err(RegistryError::NamespaceNotAllowed {
                machine: machine.machine_id,
                action: machine.action_path,
            });
        }
        if self.machines.contains_key(&machine.machine_id) {
            return Err(RegistryError::Duplicate(machine.machine_id));
        }
        self.machines.insert(machine.machine_id.clone(), machine);
        Ok(())
    }

    pub fn action_allowed(&self, action: &str) -> bool {
        self.allowed_actions.as_ref().is_none_or(|ns| ns.iter().any(|p| action.starts_with(p.as_str())))
    }

    pub fn machine(&self, machine_id: &str) -> Option<&EffectMachine> {
        self.machines.get(machine_id)
    }

    pub fn machine_ids(&self) -> Vec<&str> {
        self.machines.keys().map(String::as_str).collect()
    }

    pub fn len(&self) -> usize {
        self.machines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.machines.is_empty()
    }

    /// Declared action path of a machine.
    pub fn action_path(&self, machine_id: &str) -> Option<&str> {
        self.machines.get(machine_id).map(|m| m.action_path.as_str())
    }

    /// Every `realize` call so far, in order.
    pub fn invocations(&self) -> Vec<Invocation> {
        self.log.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }

    /// Invocations from position `start` of the log onward.
    pub fn invocations_since(&self, start: usize) -> Vec<Invocation> {
        let log = self.log.lock().unwrap_or_else(|p| p.into_inner());
        log.get(start..).map(<[Invocation]>::to_vec).unwrap_or_default()
    }

    pub fn invocation_count(&self) -> usize {
        self.log.lock().unwrap_or_else(|p| p.into_inner()).len()
    }

    /// Dispatches `intent` to its target machine. Consumes the authorization,
    /// which must have been issued for exactly this intent.
    pub(crate) fn realize(&self, intent: &Intent, auth: Authorization) -> Result<Value, EffectError> {
        let outcome = self.dispatch(intent, &auth);
        self.log.lock().unwrap_or_else(|p| p.into_inner()).push(Invocation {
            intent_hash: intent.digest(),
            authorizing_seq: auth.record_seq(),
            machine: intent.target().to_string(),
            outcome: outcome.clone(),
        });
        outcome
    }

    fn dispatch(&self, intent: &Intent, auth: &Authorization) -> Result<Value, EffectError> {
        if auth.intent_hash() != intent.digest() {
            return Err(EffectError::AuthorizationMismatch);
        }
        let machine = self
            .machines
            .get(intent.target())
            .ok_or_else(|| EffectError::UnknownMachine(intent.target().to_string()))?;
        for (name, shape) in &machine.required_params {
            match intent.params().get(name) {
                None => return Err(EffectError::ParamValidation(format!("missing parameter '{name}'"))),
                Some(v) if !shape.admits(v) => {
                    return Err(EffectError::ParamValidation(format!(
                        "parameter '{name}' must be {}, got {}",
                        shape.name(),
                        v.type_name()
                    )))
                }
                Some(_) => {}
            }
        }
        (machine.handler)(intent.params()).map_err(EffectError::HandlerFailure)
    }
}
