use fcmon::lang::{desugar, load_program, parse, pretty_print, DiagnosticKind, Expr, ExprKind, SourcePos};
use fcmon::monitors::corpus;
use fcmon::value::LocalValue;

fn visit(e: &Expr, f: &mut dyn FnMut(&Expr)) {
    f(e);
    match &e.kind {
        ExprKind::Var(_) | ExprKind::Lit(_) => {}
        ExprKind::Call(_, args) | ExprKind::TupleLit(args) => args.iter().for_each(|a| visit(a, f)),
        ExprKind::If(c, t, el) => [c, t, el].iter().for_each(|a| visit(a, f)),
        ExprKind::Nbr(_, body) => visit(body, f),
        ExprKind::Rep { inits, bodies, .. } => inits.iter().chain(bodies).for_each(|a| visit(a, f)),
        ExprKind::Let(_, bound, body) => {
            visit(bound, f);
            visit(body, f);
        }
    }
}

#[test]
fn corpus_round_trips_through_the_printer() {
    for e in corpus() {
        let once = parse(&e.source).unwrap();
        let printed = pretty_print(&once);
        assert_eq!(parse(&printed).unwrap(), once, "{}", e.name);

        let core = desugar(&once);
        let core_printed = pretty_print(&core);
        assert_eq!(parse(&core_printed).unwrap(), core, "{} core form", e.name);
    }
}

#[test]
fn desugar_is_idempotent_and_deterministic() {
    for e in corpus() {
        let p = parse(&e.source).unwrap();
        let once = desugar(&p);
        assert_eq!(desugar(&once), once, "{}", e.name);
        assert_eq!(pretty_print(&desugar(&p)), pretty_print(&once), "{}", e.name);
    }
}

#[test]
fn core_form_has_no_lets_or_tuple_literals() {
    for e in corpus() {
        let core = desugar(&parse(&e.source).unwrap());
        let mut check = |x: &Expr| {
            assert!(
                !matches!(x.kind, ExprKind::Let(..) | ExprKind::TupleLit(_)),
                "{}",
                e.name
            );
            if let ExprKind::Rep { inits, params, bodies } = &x.kind {
                assert_eq!((inits.len(), params.len(), bodies.len()), (1, 1, 1), "{}", e.name);
            }
        };
        for f in &core.functions {
            visit(&f.body, &mut check);
        }
        visit(&core.main, &mut check);
    }
}

#[test]
fn every_node_sits_inside_its_file() {
    for e in corpus() {
        let lines: Vec<&str> = e.source.lines().collect();
        let inside = |p: SourcePos| {
            p.line >= 1
                && (p.line as usize) <= lines.len()
                && p.column >= 1
                && (p.column as usize) <= lines[p.line as usize - 1].chars().count()
        };
        let program = parse(&e.source).unwrap();
        let mut check = |x: &Expr| assert!(inside(x.pos), "{}: {:?} outside the file", e.name, x.pos);
        for f in &program.functions {
            assert!(inside(f.pos));
            visit(&f.body, &mut check);
        }
        visit(&program.main, &mut check);
    }
}

#[test]
fn diagnostics_point_at_the_problem() {
    let errors = parse("def f(x) {\n  x +\n}\nf(1)").unwrap_err();
    let d = &errors.0[0];
    assert_eq!(d.kind, DiagnosticKind::Syntax);
    assert_eq!((d.pos.line, d.pos.column), (3, 1));
    assert!(errors.to_string().starts_with("3:1:"));

    let errors = parse("def f(x) { x }\ndef f(y) { y }\nf(1, 2)").unwrap_err();
    let kinds: Vec<_> = errors.0.iter().map(|d| d.kind).collect();
    assert!(kinds.contains(&DiagnosticKind::DuplicateFunction));

    let errors = parse("1 < 2 < 3").unwrap_err();
    assert_eq!(errors.0[0].kind, DiagnosticKind::Syntax);

    assert_eq!(parse("1 $ 2").unwrap_err().0[0].kind, DiagnosticKind::Lexical);
}

#[test]
fn constants_resolve_and_unknown_names_stay_symbolic() {
    let consts = [("DELAY".to_string(), LocalValue::Num(5.0))].into_iter().collect();
    let p = load_program("mux(DELAY > 3, HIGH, LOW)", &consts).unwrap();
    let printed = pretty_print(&p);
    assert!(printed.contains("5 > 3"), "{}", printed);
    assert!(printed.contains("HIGH") && printed.contains("LOW"));
}
