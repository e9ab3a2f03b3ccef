//! The example configurations shipped in `configs/` stay valid.

use std::path::Path;

use fscl::{parse_config, ExperimentKind};

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for (name, kind) in ExperimentKind::ALL {
        let cfg = parse_config(&dir.join(format!("{name}.toml"))).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(cfg.kind, kind);
        assert!(cfg.output_dir.is_some(), "{name}");
    }
}
