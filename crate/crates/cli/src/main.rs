mod render;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use exotic_core::duality::{dual_field, pairing, pairing_matrix, pairing_theta_free};
use exotic_core::elementary::{elementary_differential, elementary_differential_poly};
use exotic_core::enumerate::{enumerate_by_composition, enumerate_by_nodes, enumerate_by_order, enumerate_up_to_order, TreeFilter};
use exotic_core::equivariance::{classify_trees, CheckConfig, Property};
use exotic_core::gradient::{exotic_normal_form, gradient_classes};
use exotic_core::notation::{index_expression, parse_tree, symbolic_form};
use exotic_core::poly::Q;
use exotic_core::tree::tree_from_json;
use exotic_core::{Composition, ExoticAromaticTree, PolyVectorField};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "exotic", version, about = "Exotic aromatic trees: enumeration, evaluation, duality and equivariance checks")]
struct Cli {
    /// Seed for every randomised trial.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Skip floating-point trials.
    #[arg(long, global = true)]
    exact_only: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
    Table,
    Latex,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List trees by order, composition or node count.
    Enumerate {
        #[arg(long, conflicts_with_all = ["composition", "nodes"])]
        order: Option<u32>,
        /// Composition such as "0,1,1".
        #[arg(long, conflicts_with = "nodes")]
        composition: Option<String>,
        #[arg(long, requires = "max_order")]
        nodes: Option<u32>,
        #[arg(long)]
        max_order: Option<u32>,
        #[arg(long)]
        filter: Option<TreeFilter>,
    },
    /// Render one tree.
    Render {
        #[arg(long)]
        tree: String,
    },
    /// Evaluate the elementary differential of a tree.
    Eval {
        #[arg(long)]
        tree: String,
        /// Field text or a file containing it, one component per line.
        #[arg(long)]
        field: String,
        /// Comma-separated rational coordinates.
        #[arg(long)]
        point: String,
        /// Also print the index form and the components as polynomials.
        #[arg(long)]
        symbolic: bool,
    },
    /// Dual-field pairing of two trees, or the pairing matrix of an order.
    Pair {
        #[arg(long, num_args = 1)]
        tree: Vec<String>,
        #[arg(long, requires = "order")]
        matrix: bool,
        #[arg(long)]
        order: Option<u32>,
        /// Use θ = 1 instead of extracting the θ coefficient.
        #[arg(long)]
        theta_free: bool,
        /// Print the dual field of the second tree.
        #[arg(long)]
        show_field: bool,
    },
    /// Check equivariance properties against the structural classes.
    Verify {
        #[arg(long)]
        order: u32,
        #[arg(long, default_value = "all")]
        property: String,
        #[arg(long, default_value_t = 6)]
        trials: usize,
    },
    /// Exotic normal form of a connected tree under the gradient rewrites.
    Normalize {
        #[arg(long)]
        tree: String,
    },
    /// Gradient equivalence classes through an order.
    Classes {
        #[arg(long)]
        order: u32,
    },
}

fn read_arg(s: &str) -> Result<String> {
    let p = Path::new(s);
    if p.is_file() {
        std::fs::read_to_string(p).with_context(|| format!("reading {s}"))
    } else {
        Ok(s.to_string())
    }
}

/// A JSON tree (inline or file) or an index expression.
fn load_tree(s: &str) -> Result<ExoticAromaticTree> {
    let text = read_arg(s)?;
    if text.trim_start().starts_with('{') {
        Ok(tree_from_json(&text)?)
    } else {
        Ok(parse_tree(text.trim())?)
    }
}

fn parse_point(s: &str) -> Result<Vec<Q>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<Q>().with_context(|| format!("bad coordinate `{p}`")))
        .collect()
}

fn print_trees(out: &mut String, trees: &[ExoticAromaticTree], format: Format) -> std::fmt::Result {
    match format {
        Format::Table => {
            writeln!(out, "{}", render::TABLE_HEADER)?;
            for t in trees {
                writeln!(out, "{}", render::table_row(t))?;
            }
        }
        Format::Latex => {
            for t in trees {
                writeln!(out, "{}", render::latex_row(t))?;
            }
        }
        Format::Dot => {
            for t in trees {
                write!(out, "{}", t.to_dot())?;
            }
        }
        Format::Json => {
            let records: Vec<_> = trees.iter().map(render::tree_record).collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&records).expect("serialisable"))?;
        }
    }
    Ok(())
}

fn run(cli: Cli, out: &mut String) -> Result<bool> {
    let format = cli.format;
    match cli.command {
        Command::Enumerate { order, composition, nodes, max_order, filter } => {
            let mut trees = if let Some(n) = order {
                enumerate_by_order(n)
            } else if let Some(c) = composition {
                enumerate_by_composition(&c.parse::<Composition>()?)?
            } else if let Some(m) = nodes {
                enumerate_by_nodes(m, max_order)?
            } else {
                bail!("one of --order, --composition or --nodes is required");
            };
            if let Some(f) = filter {
                trees.retain(|t| f.accepts(t));
            }
            print_trees(out, &trees, format.unwrap_or(Format::Table))?;
        }
        Command::Render { tree } => {
            let t = load_tree(&tree)?;
            print_trees(out, &[t], format.unwrap_or(Format::Dot))?;
        }
        Command::Eval { tree, field, point, symbolic } => {
            let t = load_tree(&tree)?;
            let f = PolyVectorField::parse(&read_arg(&field)?)?;
            let x = parse_point(&point)?;
            let value = elementary_differential(&t, &f, &x)?;
            let polys = symbolic.then(|| elementary_differential_poly(&t, &f));
            if format == Some(Format::Json) {
                let mut doc = json!({ "value": value.iter().map(|v| v.to_string()).collect::<Vec<_>>() });
                if let Some(polys) = &polys {
                    let e = index_expression(&t)?;
                    doc["index"] = json!(e.to_string());
                    doc["expression"] = json!({
                        "output": e.output.map(String::from),
                        "factors": e.factors.iter().map(|f| json!({
                            "upper": f.upper.to_string(),
                            "lower": f.lower.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                        })).collect::<Vec<_>>(),
                    });
                    doc["components"] = json!(polys.iter().map(|p| p.to_string()).collect::<Vec<_>>());
                }
                writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
            } else {
                let parts: Vec<String> = value.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{}", parts.join(", "))?;
                if let Some(polys) = polys {
                    writeln!(out, "F = {}", symbolic_form(&t))?;
                    for (i, p) in polys.iter().enumerate() {
                        writeln!(out, "F{} = {p}", i + 1)?;
                    }
                }
            }
        }
        Command::Pair { tree, matrix, order, theta_free, show_field } => {
            if matrix {
                let trees = enumerate_up_to_order(order.expect("required by clap"));
                let m = pairing_matrix(&trees);
                let doc = json!({
                    "trees": trees.iter().map(symbolic_form).collect::<Vec<_>>(),
                    "matrix": m.iter().map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
                });
                writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
            } else {
                let [a, b] = tree.as_slice() else {
                    bail!("pair needs exactly two --tree arguments");
                };
                let (a, b) = (load_tree(a)?, load_tree(b)?);
                let v = if theta_free { pairing_theta_free(&a, &b) } else { pairing(&a, &b) };
                writeln!(out, "{v}")?;
                if show_field {
                    write!(out, "{}", dual_field(&b))?;
                }
            }
        }
        Command::Verify { order, property, trials } => {
            let props: Vec<Property> = if property == "all" {
                Property::ALL.to_vec()
            } else {
                property.split(',').map(|p| p.parse::<Property>().map_err(anyhow::Error::msg)).collect::<Result<_>>()?
            };
            let float_trials = if cli.exact_only { 0 } else { 4 };
            let cfg = CheckConfig::new(trials, float_trials, cli.seed);
            let table = classify_trees(&enumerate_up_to_order(order), &props, &cfg);
            if format == Some(Format::Table) {
                write!(out, "{}", table.render())?;
            } else {
                for row in &table.rows {
                    let reports: Vec<_> = row.reports.iter().map(|r| r.to_json()).collect();
                    let line = json!({
                        "tree": symbolic_form(&row.tree),
                        "flags": row.flags,
                        "reports": reports,
                        "disagreements": row.disagreements().iter().map(|p| p.name()).collect::<Vec<_>>(),
                    });
                    writeln!(out, "{line}")?;
                }
            }
            for (p, in_class, passing, agree) in table.summary() {
                eprintln!("{p}: {passing} pass, {in_class} in class ({}), {agree}/{} agree", p.class_name(), table.rows.len());
            }
            if let Some(e) = table.first_disagreement() {
                eprintln!("{e}");
                return Ok(false);
            }
        }
        Command::Normalize { tree } => {
            let t = load_tree(&tree)?;
            let nf = exotic_normal_form(&t)?;
            print_trees(out, &[nf], format.unwrap_or(Format::Table))?;
        }
        Command::Classes { order } => {
            let classes = gradient_classes(order);
            if format == Some(Format::Json) {
                let doc: Vec<_> = classes
                    .iter()
                    .map(|c| {
                        json!({
                            "members": c.iter().map(symbolic_form).collect::<Vec<_>>(),
                            "normal_form": exotic_normal_form(&c[0]).ok().map(|t| symbolic_form(&t)),
                        })
                    })
                    .collect();
                writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
            } else {
                for c in &classes {
                    let members: Vec<String> = c.iter().map(symbolic_form).collect();
                    match exotic_normal_form(&c[0]) {
                        Ok(nf) => writeln!(out, "{}  [normal form {}]", members.join(" ~ "), symbolic_form(&nf))?,
                        Err(_) => writeln!(out, "{}", members.join(" ~ "))?,
                    }
                }
                let connected = classes.iter().filter(|c| c[0].is_connected()).count();
                eprintln!("{} classes, {connected} connected", classes.len());
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let mut out = String::new();
    let result = run(Cli::parse(), &mut out);
    // a closed pipe is not an error
    let _ = std::io::stdout().lock().write_all(out.as_bytes());
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
