use ddlqr_sdp::{
    solve, AffineExpr, Cone, ConicProgram, ProgramBuilder, Sense, SolveStatus, SolverSettings,
    SparseMatrix,
};
use nalgebra::{DMatrix, DVector};

#[test]
fn scalar_lower_bound() {
    let mut b = ProgramBuilder::new();
    let x = b.scalar("x");
    b.minimize(AffineExpr::var(x));
    b.nonneg(&(AffineExpr::var(x) - DMatrix::from_element(1, 1, 1.0)));
    let sol = solve(&b.build(), &SolverSettings::default());
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.scalar(x) - 1.0).abs() < 1e-7, "x = {}", sol.scalar(x));
}

#[test]
fn trace_above_identity() {
    let mut b = ProgramBuilder::new();
    let p = b.symmetric("P", 2);
    b.minimize(AffineExpr::trace(&DMatrix::identity(2, 2), p));
    b.lmi(&(AffineExpr::var(p) - DMatrix::identity(2, 2)), Sense::Psd).unwrap();
    let sol = solve(&b.build(), &SolverSettings::default());
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective - 2.0).abs() < 1e-7);
    assert!((sol.value(p) - DMatrix::<f64>::identity(2, 2)).amax() < 1e-6);
}

#[test]
fn two_by_two_determinant() {
    let mut b = ProgramBuilder::new();
    let t = b.scalar("t");
    b.maximize(AffineExpr::var(t));
    let off = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    b.lmi(&(AffineExpr::scaled(t, &off) + DMatrix::identity(2, 2)), Sense::Psd).unwrap();
    let sol = solve(&b.build(), &SolverSettings::default());
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.scalar(t) - 1.0).abs() < 1e-7, "t = {}", sol.scalar(t));
}

#[test]
fn infeasible_is_reported() {
    let mut b = ProgramBuilder::new();
    let x = b.scalar("x");
    b.minimize(AffineExpr::var(x));
    b.nonneg(&(AffineExpr::var(x) - DMatrix::from_element(1, 1, 1.0)));
    b.nonneg(&(-AffineExpr::var(x)));
    let sol = solve(&b.build(), &SolverSettings::default());
    assert_eq!(sol.status, SolveStatus::Infeasible);
}

#[test]
fn unbounded_is_reported() {
    let mut b = ProgramBuilder::new();
    let x = b.scalar("x");
    b.minimize(AffineExpr::var(x));
    b.nonneg(&(-AffineExpr::var(x)));
    let sol = solve(&b.build(), &SolverSettings::default());
    assert_eq!(sol.status, SolveStatus::Unbounded);
}

#[test]
fn inconsistent_equalities_are_infeasible() {
    let mut b = ProgramBuilder::new();
    let x = b.scalar("x");
    b.minimize(AffineExpr::var(x));
    b.equal_zero(&(AffineExpr::var(x) - DMatrix::from_element(1, 1, 1.0)));
    b.equal_zero(&(AffineExpr::var(x) - DMatrix::from_element(1, 1, 2.0)));
    b.nonneg(&AffineExpr::var(x));
    assert_eq!(solve(&b.build(), &SolverSettings::default()).status, SolveStatus::Infeasible);
}

#[test]
fn equality_constrained_sdp() {
    // min ⟨C, X⟩ s.t. Tr(X) = 1, X ⪰ 0 has value λ_min(C).
    let cm = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
    let mut b = ProgramBuilder::new();
    let x = b.symmetric("X", 3);
    b.minimize(AffineExpr::trace(&cm, x));
    b.equal_zero(&(AffineExpr::trace(&DMatrix::identity(3, 3), x) - DMatrix::from_element(1, 1, 1.0)));
    b.lmi(&AffineExpr::var(x), Sense::Psd).unwrap();
    let sol = solve(&b.build(), &SolverSettings::default());
    assert_eq!(sol.status, SolveStatus::Optimal);
    let expect = 2.0 - std::f64::consts::SQRT_2;
    assert!((sol.objective - expect).abs() < 1e-7, "{}", sol.objective);
}

#[test]
fn raw_standard_form_lp() {
    // min -x1 - x2 s.t. x1 + 2 x2 ≤ 4, 3 x1 + x2 ≤ 6, x ≥ 0. Optimum at (8/5, 6/5).
    let a = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 3.0, 1.0, -1.0, 0.0, 0.0, -1.0]);
    let p = ConicProgram {
        c: DVector::from_vec(vec![-1.0, -1.0]),
        a: SparseMatrix::from_dense(&a),
        b: DVector::from_vec(vec![4.0, 6.0, 0.0, 0.0]),
        cones: vec![Cone::Nonneg(4)],
        blocks: vec![],
        objective_offset: 0.0,
        maximize: false,
        margin: 0.0,
    };
    let mut p = p;
    let mut b = ProgramBuilder::new();
    let x = b.rect("x", 2, 1);
    p.blocks = b.build().blocks;
    let sol = solve(&p, &SolverSettings::default());
    assert_eq!(sol.status, SolveStatus::Optimal);
    let v = sol.value(x);
    assert!((v[0] - 1.6).abs() < 1e-7 && (v[1] - 1.2).abs() < 1e-7);
}

#[test]
fn deterministic_given_program_bytes() {
    let mut b = ProgramBuilder::new();
    let p = b.symmetric("P", 3);
    let w = DMatrix::from_row_slice(3, 3, &[3.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 1.0]);
    b.minimize(AffineExpr::trace(&w, p));
    b.lmi(&(AffineExpr::var(p) - DMatrix::identity(3, 3)), Sense::Psd).unwrap();
    let prog = ConicProgram::parse(&b.build().dump()).unwrap();
    let s1 = solve(&prog, &SolverSettings::default());
    let s2 = solve(&prog, &SolverSettings::default());
    assert_eq!(s1.x, s2.x);
    assert_eq!(s1.iterations, s2.iterations);
}
