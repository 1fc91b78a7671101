//! Parse a program with `let` and a two-variable `rep`, print the core form
//! it desugars to and confirm printing is a fixed point of parsing.

use fcmon::lang::{desugar, parse, pretty_print};

const SOURCE: &str = r#"
def gradient-with-id(source) {
  let state = rep (infinity, myID()) { (d, who) =>
    mux(source, 0, minHood(nbr{d}) + 1),
    who
  } in
  [1st(state), 2nd(state)]
}
gradient-with-id(source())
"#;

fn main() {
    let program = match parse(SOURCE) {
        Ok(p) => p,
        Err(errors) => {
            eprintln!("{}", errors);
            std::process::exit(2);
        }
    };
    println!("surface form:\n{}\n", pretty_print(&program));

    let core = desugar(&program);
    let printed = pretty_print(&core);
    println!("core form:\n{}\n", printed);

    let reparsed = parse(&printed).expect("printed core form parses");
    assert_eq!(pretty_print(&reparsed), printed);
    println!("print . parse is stable on the core form");

    match parse("def broken(x) { x + }") {
        Ok(_) => unreachable!(),
        Err(errors) => println!("\ndiagnostics for a broken program:\n{}", errors),
    }
}
