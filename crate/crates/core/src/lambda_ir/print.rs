use super::{Program, Term};

/// Canonical source text with minimal parentheses.
pub fn pretty_print(t: &Term) -> String {
    let mut out = String::new();
    write_expr(t, &mut out);
    out
}

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for (name, body) in &p.defs {
        out.push_str(name);
        out.push_str(" := ");
        write_expr(body, &mut out);
        out.push_str(";\n");
    }
    if let Some(m) = &p.main {
        write_expr(m, &mut out);
        out.push('\n');
    }
    out
}

fn write_expr(t: &Term, out: &mut String) {
    match t {
        Term::Lam(..) => {
            out.push('\\');
            let mut body = t;
            let mut first = true;
            while let Term::Lam(p, b) = body {
                if !first {
                    out.push(' ');
                }
                out.push_str(p);
                first = false;
                body = b;
            }
            out.push_str(". ");
            write_expr(body, out);
        }
        Term::App(..) => {
            let (head, args) = t.spine();
            write_atom(head, out);
            for a in args {
                out.push(' ');
                write_atom(a, out);
            }
        }
        Term::Var(v) => out.push_str(v),
        Term::Int(n) => out.push_str(&n.to_string()),
        Term::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Term::Prim(p) => out.push_str(&p.to_string()),
    }
}

fn write_atom(t: &Term, out: &mut String) {
    if matches!(t, Term::Lam(..) | Term::App(..)) {
        out.push('(');
        write_expr(t, out);
        out.push(')');
    } else {
        write_expr(t, out);
    }
}
