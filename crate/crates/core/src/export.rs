//! Text serializers for fields, trajectories and reports. Floats use Rust's
//! shortest round-trip formatting, so identical runs give identical bytes.

use std::fmt::Write;

use crate::bonding::{BetaTrajectory, TimeGrid};
use crate::bounds::{BoundsReport, GronwallValue};
use crate::fem::{DofMap, ScalarField};
use crate::mesh::Mesh;
use crate::scheme::{ConvergenceReport, SmallnessReport};

/// `vertex_id,x,y,value`.
pub fn field_csv(mesh: &Mesh, field: &ScalarField) -> String {
    let mut s = String::from("vertex_id,x,y,value\n");
    for (i, (p, v)) in mesh.vertices().iter().zip(&field.values).enumerate() {
        writeln!(s, "{i},{},{},{v}", p[0], p[1]).unwrap();
    }
    s
}

/// Legacy ASCII unstructured grid with the field as point data.
pub fn field_vtk(mesh: &Mesh, field: &ScalarField, name: &str) -> String {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    writeln!(s, "{name} at time node {}", field.time_index).unwrap();
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(s, "POINTS {} double", mesh.n_vertices()).unwrap();
    for p in mesh.vertices() {
        writeln!(s, "{} {} 0", p[0], p[1]).unwrap();
    }
    let nt = mesh.n_triangles();
    writeln!(s, "CELLS {nt} {}", 4 * nt).unwrap();
    for t in mesh.triangles() {
        writeln!(s, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(s, "CELL_TYPES {nt}").unwrap();
    for _ in 0..nt {
        s.push_str("5\n");
    }
    writeln!(s, "POINT_DATA {}", mesh.n_vertices()).unwrap();
    writeln!(s, "SCALARS {name} double 1").unwrap();
    s.push_str("LOOKUP_TABLE default\n");
    for v in &field.values {
        writeln!(s, "{v}").unwrap();
    }
    s
}

/// `t,vertex_id,beta`, one row per node and contact vertex.
pub fn beta_csv(grid: &TimeGrid, dofs: &DofMap, traj: &BetaTrajectory) -> String {
    let mut s = String::from("t,vertex_id,beta\n");
    for (k, field) in traj.fields.iter().enumerate() {
        let t = grid.node(k);
        for (slot, &v) in dofs.contact_vertices().iter().enumerate() {
            writeln!(s, "{t},{v},{}", field.values[slot]).unwrap();
        }
    }
    s
}

pub fn convergence_csv(report: &ConvergenceReport) -> String {
    let mut s = String::from(
        "iteration,e_u,e_beta,ratio,u_h1_max,u_linf_max,beta_linf,picard_iterations,inner_iterations_max,inner_residual_max\n",
    );
    for it in &report.iterations {
        let ratio = it.ratio.map_or(String::new(), |r| r.to_string());
        writeln!(
            s,
            "{},{},{},{ratio},{},{},{},{},{},{}",
            it.n,
            it.e_u,
            it.e_beta,
            it.u_h1_max,
            it.u_linf_max,
            it.beta_linf,
            it.picard_iterations,
            it.inner_iterations_max,
            it.inner_residual_max
        )
        .unwrap();
    }
    s
}

fn gronwall_text(g: GronwallValue) -> String {
    match g {
        GronwallValue::Finite(v) => v.to_string(),
        GronwallValue::Infinite => "inf".into(),
    }
}

/// `quantity,value` rows.
pub fn bounds_csv(smallness: &SmallnessReport, bounds: &BoundsReport, fit: Option<(f64, f64)>) -> String {
    let mut rows: Vec<(&str, String)> = vec![
        ("delta_hat", smallness.delta_hat.to_string()),
        ("smallness_pass", smallness.pass.to_string()),
        ("c0_hat", bounds.c0_hat.to_string()),
        ("apriori_h1_rhs", bounds.apriori_h1_rhs.to_string()),
        ("h1_ratio", bounds.h1_ratio.to_string()),
        ("k_value", bounds.k_value.to_string()),
        ("linf_ratio", bounds.linf_ratio.to_string()),
        ("gronwall_rhs", gronwall_text(bounds.gronwall_rhs)),
        ("gronwall_ratio", bounds.gronwall_ratio.to_string()),
        ("beta_box_ok", bounds.beta_box_ok.to_string()),
        ("beta_monotone_ok", bounds.beta_monotone_ok.to_string()),
        ("beta_worst_violation", bounds.beta_worst_violation.to_string()),
    ];
    if let Some((b, c)) = fit {
        rows.push(("b_fit", b.to_string()));
        rows.push(("c_fit", c.to_string()));
    }
    let mut s = String::from("quantity,value\n");
    for (k, v) in rows {
        writeln!(s, "{k},{v}").unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_dof_map, BoundaryField};
    use crate::mesh::SideTags;

    #[test]
    fn field_formats() {
        let mesh = Mesh::structured_rectangle(1.0, 1.0, 1, 1, SideTags::contact_bottom()).unwrap();
        let f = ScalarField {
            values: vec![0.0, 0.5, 1.0, -0.25],
            time_index: 2,
        };
        let csv = field_csv(&mesh, &f);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(2).unwrap().ends_with(",0.5"));
        let vtk = field_vtk(&mesh, &f, "u");
        assert!(vtk.contains("CELLS 2 8\n") && vtk.contains("POINT_DATA 4\n"));
        assert!(vtk.trim_end().ends_with("-0.25"));
    }

    #[test]
    fn beta_rows() {
        let mesh = Mesh::structured_rectangle(1.0, 1.0, 2, 2, SideTags::contact_bottom()).unwrap();
        let dofs = build_dof_map(&mesh);
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let traj = BetaTrajectory::constant(&BoundaryField::constant(dofs.n_contact(), 0.5, 0), &grid);
        let csv = beta_csv(&grid, &dofs, &traj);
        assert_eq!(csv.lines().count(), 1 + 3 * dofs.n_contact());
        assert_eq!(csv.lines().last().unwrap().split(',').next(), Some("1"));
    }
}
