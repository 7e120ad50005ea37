use std::fmt::Write;

use super::ast::*;
use crate::events::Action;
use crate::value::Value;

const INDENT: &str = "    ";

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(", ")
}

fn assignments(values: &[(Ident, Value)]) -> String {
    if values.is_empty() {
        return "{}".into();
    }
    format!("{{ {} }}", join(values, |(k, v)| format!("{k} = {v}")))
}

fn block(head: String, lines: Vec<String>) -> String {
    if lines.is_empty() {
        return format!("{head} {{}}");
    }
    let mut out = format!("{head} {{\n");
    let n = lines.len();
    for (i, line) in lines.into_iter().enumerate() {
        let sep = if i + 1 < n { "," } else { "" };
        writeln!(out, "{INDENT}{line}{sep}").expect("write to string");
    }
    out.push('}');
    out
}

fn action(a: &Action) -> String {
    match a {
        Action::Set { page, field, expr } => format!("set {page}.{field} = {expr}"),
        Action::Refresh { page } => format!("refresh {page}"),
        Action::Transition { individual, values } => {
            let body: Vec<String> = values.iter().map(|(k, e)| format!("{k} = {e}")).collect();
            if body.is_empty() {
                format!("transition {individual} {{}}")
            } else {
                format!("transition {individual} {{ {} }}", body.join(", "))
            }
        }
    }
}

fn decl(d: &DeclKind) -> String {
    match d {
        DeclKind::Concept { name, fields } => {
            format!("concept {name} ({})", join(fields, |(f, k)| format!("{f}: {k}")))
        }
        DeclKind::Individual { name, concept, values } => {
            format!("individual {name} : {concept} {}", assignments(values))
        }
        DeclKind::Relation { name } => format!("relation {name}"),
        DeclKind::Frame { frame } => format!("frame {frame}"),
        DeclKind::Dimension { dim, values } => format!("dimension {dim} {{ {} }}", join(values, |v| v.to_string())),
        DeclKind::Profile { name, rank, dims } => {
            let mut entries = vec![format!("rank = {rank}")];
            entries.extend(dims.iter().map(|(d, v)| format!("{d} = {v}")));
            format!("profile {name} {{ {} }}", entries.join(", "))
        }
        DeclKind::Metric {
            name,
            order,
            saturates,
            rows,
        } => {
            let mut head = format!("metric {name} order ({})", join(order, |d| d.to_string()));
            if let Some(k) = saturates {
                write!(head, " saturates {k}").expect("write to string");
            }
            let lines = rows
                .iter()
                .map(|r| {
                    format!(
                        "[{}] -> {{{}}}",
                        join(&r.chain, |(d, v)| format!("{d} = {v}")),
                        join(&r.values, |v| v.to_string())
                    )
                })
                .collect();
            block(head, lines)
        }
        DeclKind::Script {
            name,
            hook,
            trigger,
            scenario,
            actions,
        } => {
            let mut head = format!("script {name}");
            if *hook {
                head.push_str(" hook");
            }
            write!(head, " on {trigger}").expect("write to string");
            if !scenario.is_empty() {
                write!(head, " scenario {}", join(scenario, |f| f.to_string())).expect("write to string");
            }
            block(head, actions.iter().map(action).collect())
        }
        DeclKind::Source { name, kind, items } => block(
            format!("source {name} kind {kind}"),
            items
                .iter()
                .map(|i| format!("{} {}", i.id, assignments(&i.values)))
                .collect(),
        ),
        DeclKind::Page {
            name,
            required,
            conditions,
            items,
        } => {
            let mut head = format!("page {name} requires {required}");
            if !conditions.is_empty() {
                write!(head, " when {}", join(conditions, |(d, v)| format!("{d} = {v}"))).expect("write to string");
            }
            block(head, items.iter().map(|i| format!("item {i}")).collect())
        }
    }
}

/// Canonical text of `schema`. Declarations keep their order; block
/// declarations are set off by blank lines.
pub fn print(schema: &Schema) -> String {
    let mut out = String::new();
    let mut prev_multiline = false;
    for (i, d) in schema.decls.iter().enumerate() {
        let text = decl(&d.kind);
        let multiline = text.contains('\n');
        if i > 0 && (multiline || prev_multiline) {
            out.push('\n');
        }
        out.push_str(&text);
        out.push('\n');
        prev_multiline = multiline;
    }
    out
}
