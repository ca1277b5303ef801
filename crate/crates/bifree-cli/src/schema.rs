//! Published JSON schemas of the config and of both report kinds. The suite
//! and verify schemas refer to definitions in the config schema by its `$id`.

pub const CONFIG: &str = include_str!("../schemas/config.schema.json");
pub const SUITE: &str = include_str!("../schemas/suite.schema.json");
pub const VERIFY: &str = include_str!("../schemas/verify.schema.json");
