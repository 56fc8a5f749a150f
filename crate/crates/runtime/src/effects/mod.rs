//! Effect machines and the registry that realizes authorized intents.

mod builtin;
mod registry;

pub use builtin::{
    confine, install_builtin_machines, load_http_fixtures, params_id, register_builtin_machines, HttpFixtures,
    SetupError, BUILTIN_MACHINES, EMAIL_SEND, FILE_READ, FILE_WRITE, HTTP_GET, KV_GET, KV_PUT, PAYMENT_REFUND,
};
pub use registry::{EffectError, EffectMachine, EffectRegistry, Handler, Invocation, RegistryError, Shape};
