use pyo3::prelude::*;

#[pymodule]
fn vgoalmc_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
