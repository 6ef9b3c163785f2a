use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &str) {
    Python::initialize();
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(wgm_isolator_py::wgm_isolator_py)(py);
        let globals = PyDict::new(py);
        globals.set_item("wi", module).unwrap();
        let code = CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.display(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn params_validate_on_construction_and_assignment() {
    run(r#"
p = wi.SystemParams(g0=20, kappa_i=3, kappa_ex=5)
assert p.kappa() == 8.0 and p.p == 1.0
try:
    p.p = 1.5
    raise AssertionError("accepted")
except ValueError:
    pass
assert p.p == 1.0
try:
    wi.SystemParams(gamma=-1)
    raise AssertionError("accepted")
except ValueError:
    pass
"#);
}

#[test]
fn reciprocity_and_isolation_through_the_bindings() {
    run(r#"
p = wi.SystemParams(h=20, p=0.8)
s = wi.spectrum(p, [-30.0 + i for i in range(61)])
assert max(abs(f - b) for f, b in zip(s["t_fwd"], s["t_bwd"])) < 1e-10
best = wi.optimal_coupling(20, 5)
assert abs(best["kappa_ex"] - 5.24) < 0.01
d12, dc = wi.isolation_conditions(20, 5, best["kappa_ex"])
q = wi.SystemParams.ideal(20, 5, best["kappa_ex"])
q.delta12 = d12
assert wi.transmission(q, dc, "backward") < 1e-10
try:
    wi.transmission(q, 0.0, "sideways")
    raise AssertionError("accepted")
except ValueError:
    pass
"#);
}

#[test]
fn helicity_partner_flips_sign() {
    run(r#"
g = wi.FieldGrid.synthetic(5, 4, -0.3, mode_number=7)
assert g.shape == (5, 4)
assert all(abs(a + b) < 1e-12 for a, b in zip(g.helicity_map(), g.partner().helicity_map()))
g = wi.FieldGrid([1.0], [0.0, 1.0], [(1+0j, 1j, 0j), (0j, 0j, 0j)], 3)
assert g.helicity_map() == [1.0, None]
"#);
}
