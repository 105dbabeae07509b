use super::{MilpModel, RowSense, VarId};
use crate::error::{Error, Result};

/// Introduces `z = x·v` for binary `x` and `v ∈ [0, U]` through the four
/// McCormick rows, which are exact when `x` is integral. `U` is read from
/// the upper bound of `v`.
pub fn linearize_product(model: &mut MilpModel, x: VarId, v: VarId, name: &str) -> Result<VarId> {
    let u = model.lp.upper[v.0];
    if !u.is_finite() {
        return Err(Error::Input(format!(
            "product {name} needs a finite upper bound on {}",
            model.lp.var_names[v.0]
        )));
    }
    linearize_product_expr(model, x, &[(v, 1.0)], u, name)
}

/// As [`linearize_product`] for `z = x·(Σ c_i v_i)` where the sum lies in
/// `[0, U]`: coefficients and variable lower bounds must be nonnegative.
pub fn linearize_product_expr(
    model: &mut MilpModel,
    x: VarId,
    terms: &[(VarId, f64)],
    u: f64,
    name: &str,
) -> Result<VarId> {
    if !model.is_binary(x) {
        return Err(Error::Input(format!("{} is not a binary column", model.lp.var_names[x.0])));
    }
    if !u.is_finite() || u < 0.0 {
        return Err(Error::Input(format!("product {name} needs a finite bound, got {u}")));
    }
    if let Some(&(v, _)) = terms.iter().find(|&&(v, c)| c < 0.0 || model.lp.lower[v.0] < 0.0) {
        return Err(Error::Input(format!("product {name} needs {} >= 0", model.lp.var_names[v.0])));
    }
    let z = model.add_continuous(name, 0.0, 0.0, u);
    let minus = |t: &[(VarId, f64)]| t.iter().map(|&(v, c)| (v, -c)).collect::<Vec<_>>();
    model.add_row(format!("{name}_ux"), [(z, 1.0), (x, -u)], RowSense::Le, 0.0);
    model.add_row(format!("{name}_v"), std::iter::once((z, 1.0)).chain(minus(terms)), RowSense::Le, 0.0);
    model.add_row(
        format!("{name}_lo"),
        [(z, 1.0), (x, -u)].into_iter().chain(minus(terms)),
        RowSense::Ge,
        -u,
    );
    Ok(z)
}
