use qtruss_core::truss::BuiltinProblem;

fn main() {
    for p in BuiltinProblem::ALL {
        let path = format!("{}/fixtures/{}.json", env!("CARGO_MANIFEST_DIR"), p.name());
        std::fs::write(&path, p.problem().to_json()).unwrap();
    }
}
