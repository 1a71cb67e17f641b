//! Line-oriented model format.
//!
//! ```text
//! # comment
//! protected Z bernoulli 0.5
//! latent U1 bernoulli 0.5
//! latent U2 gaussian 0 1 bins=8
//! latent C categorical 0.25 0.25 0.5
//! feature Xc critical = Z + U1
//! feature Xg general = U2
//! label Y = ind(Xc + Xg >= 1)
//! output Yhat = Xc + Xg
//! ```

use super::expr::parse_at;
use super::{Assignment, Distribution, Feature, LatentSpec, Scm, Tag, DEFAULT_GAUSSIAN_BINS};
use crate::error::{Error, Result};

/// A whitespace-separated word with its 1-based column.
struct Word<'a> {
    text: &'a str,
    column: usize,
}

fn words(line: &str, offset: usize) -> Vec<Word<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (col, (i, c)) in line.char_indices().enumerate() {
        if c.is_whitespace() {
            if let Some((s, sc)) = start.take() {
                out.push(Word {
                    text: &line[s..i],
                    column: offset + sc,
                });
            }
        } else if start.is_none() {
            start = Some((i, col));
        }
    }
    if let Some((s, sc)) = start {
        out.push(Word {
            text: &line[s..],
            column: offset + sc,
        });
    }
    out
}

fn err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn number(line: usize, w: &Word) -> Result<f64> {
    w.text
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| err(line, w.column, format!("expected a number, found `{}`", w.text)))
}

fn distribution(line: usize, kind: &Word, args: &[Word], end_column: usize) -> Result<Distribution> {
    let need = |n: usize| -> Result<()> {
        if args.len() < n {
            let col = args.last().map_or(kind.column + kind.text.chars().count(), |w| {
                w.column + w.text.chars().count()
            });
            return Err(err(line, col.max(end_column), format!("`{}` needs {n} parameter(s)", kind.text)));
        }
        if args.len() > n {
            return Err(err(line, args[n].column, format!("unexpected `{}`", args[n].text)));
        }
        Ok(())
    };
    match kind.text {
        "bernoulli" => {
            need(1)?;
            Ok(Distribution::Bernoulli { p: number(line, &args[0])? })
        }
        "categorical" => {
            if args.is_empty() {
                return Err(err(line, end_column, "`categorical` needs at least one weight"));
            }
            let weights = args.iter().map(|w| number(line, w)).collect::<Result<_>>()?;
            Ok(Distribution::Categorical { weights })
        }
        "gaussian" => {
            let (params, bins) = match args.last() {
                Some(w) if w.text.starts_with("bins=") => {
                    let b = w.text["bins=".len()..]
                        .parse::<usize>()
                        .map_err(|_| err(line, w.column, format!("bad bin count `{}`", w.text)))?;
                    (&args[..args.len() - 1], b)
                }
                _ => (args, DEFAULT_GAUSSIAN_BINS),
            };
            if params.len() != 2 {
                let col = params.get(2).map_or(end_column, |w| w.column);
                return Err(err(line, col, "`gaussian` needs a mean and a standard deviation"));
            }
            Ok(Distribution::Gaussian {
                mean: number(line, &params[0])?,
                sd: number(line, &params[1])?,
                bins,
            })
        }
        other => Err(err(
            line,
            kind.column,
            format!("unknown distribution `{other}`; expected bernoulli, categorical or gaussian"),
        )),
    }
}

pub(super) fn parse(text: &str) -> Result<Scm> {
    let mut protected: Option<LatentSpec> = None;
    let mut latents = Vec::new();
    let mut features = Vec::new();
    let mut label = None;
    let mut output = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let (head, rhs) = match content.find('=') {
            Some(pos) if !content[..pos].trim_start().starts_with("latent")
                && !content[..pos].trim_start().starts_with("protected") =>
            {
                (&content[..pos], Some(pos))
            }
            _ => (content, None),
        };
        let ws = words(head, 1);
        let end_column = content.trim_end().chars().count() + 1;
        let keyword = &ws[0];
        let expr_of = |pos: usize| -> Result<super::Expr> {
            let column = content[..pos + 1].chars().count() + 1;
            let src = &content[pos + 1..];
            if src.trim().is_empty() {
                return Err(err(line_no, column, "missing expression after `=`"));
            }
            parse_at(src, line_no, column)
        };
        match keyword.text {
            "latent" | "protected" => {
                if ws.len() < 3 {
                    return Err(err(line_no, end_column, format!("`{}` needs a name and a distribution", keyword.text)));
                }
                let spec = LatentSpec::new(ws[1].text, distribution(line_no, &ws[2], &ws[3..], end_column)?);
                if keyword.text == "protected" {
                    if protected.is_some() {
                        return Err(err(line_no, keyword.column, "only one protected variable is allowed"));
                    }
                    protected = Some(spec);
                } else {
                    latents.push(spec);
                }
            }
            "feature" => {
                let pos = rhs.ok_or_else(|| err(line_no, end_column, "expected `=` and an expression"))?;
                if ws.len() != 3 {
                    let col = ws.get(3).map_or(end_column.min(pos + 1), |w| w.column);
                    return Err(err(line_no, col, "expected `feature <name> <critical|general> = <expr>`"));
                }
                let tag = match ws[2].text {
                    "critical" => Tag::Critical,
                    "general" => Tag::General,
                    other => {
                        return Err(err(
                            line_no,
                            ws[2].column,
                            format!("expected `critical` or `general`, found `{other}`"),
                        ))
                    }
                };
                features.push(Feature::new(ws[1].text, tag, expr_of(pos)?));
            }
            "label" | "output" => {
                let pos = rhs.ok_or_else(|| err(line_no, end_column, "expected `=` and an expression"))?;
                if ws.len() != 2 {
                    let col = ws.get(2).map_or(pos + 1, |w| w.column);
                    return Err(err(line_no, col, format!("expected `{} <name> = <expr>`", keyword.text)));
                }
                let slot = if keyword.text == "label" { &mut label } else { &mut output };
                if slot.is_some() {
                    return Err(err(line_no, keyword.column, format!("duplicate `{}` line", keyword.text)));
                }
                *slot = Some(Assignment::new(ws[1].text, expr_of(pos)?));
            }
            other => {
                return Err(err(
                    line_no,
                    keyword.column,
                    format!("unknown line kind `{other}`; expected latent, protected, feature, label or output"),
                ))
            }
        }
    }
    let protected = protected.ok_or_else(|| err(1, 1, "missing `protected` line"))?;
    Scm::new(protected, latents, features, label, output)
}

fn write_distribution(d: &Distribution) -> String {
    match d {
        Distribution::Bernoulli { p } => format!("bernoulli {p}"),
        Distribution::Categorical { weights } => {
            let w: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
            format!("categorical {}", w.join(" "))
        }
        Distribution::Gaussian { mean, sd, bins } => format!("gaussian {mean} {sd} bins={bins}"),
    }
}

pub(super) fn write(scm: &Scm) -> String {
    let mut out = String::new();
    let p = scm.protected();
    out.push_str(&format!("protected {} {}\n", p.name, write_distribution(&p.distribution)));
    for l in scm.latents() {
        out.push_str(&format!("latent {} {}\n", l.name, write_distribution(&l.distribution)));
    }
    for f in scm.features() {
        let tag = match f.tag {
            Tag::Critical => "critical",
            Tag::General => "general",
        };
        out.push_str(&format!("feature {} {tag} = {}\n", f.name, f.expr));
    }
    if let Some(l) = scm.label() {
        out.push_str(&format!("label {} = {}\n", l.name, l.expr));
    }
    if let Some(o) = scm.output() {
        out.push_str(&format!("output {} = {}\n", o.name, o.expr));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# two-feature model
protected Z bernoulli 0.5
latent U1 bernoulli 0.5   # trailing comment
latent  U2   gaussian 0 1 bins=4
feature Xc critical = Z + U1
feature Xg general = U2
label Y = ind(Xc + Xg >= 1)
output Yhat = Xc + Xg
";

    #[test]
    fn parses_all_line_kinds() {
        let scm = parse(SAMPLE).unwrap();
        assert_eq!(scm.latent_names(), vec!["U1", "U2"]);
        assert_eq!(scm.critical(), vec!["Xc"]);
        assert_eq!(scm.general(), vec!["Xg"]);
        assert_eq!(scm.label().unwrap().name, "Y");
        assert_eq!(scm.output_name().unwrap(), "Yhat");
        assert_eq!(
            scm.latents()[1].distribution,
            Distribution::Gaussian {
                mean: 0.0,
                sd: 1.0,
                bins: 4
            }
        );
    }

    #[test]
    fn round_trip() {
        let scm = parse(SAMPLE).unwrap();
        assert_eq!(parse(&write(&scm)).unwrap(), scm);
    }

    fn position(src: &str) -> (usize, usize) {
        match parse(src) {
            Err(Error::Parse { line, column, .. }) => (line, column),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn errors_cite_line_and_column() {
        assert_eq!(position("protected Z bernoulli 0.5\nlatent U1 poisson 2\n"), (2, 11));
        assert_eq!(position("protected Z bernoulli 0.5\nfeature X1 secret = Z\n"), (2, 12));
        assert_eq!(position("protected Z bernoulli 0.5\nfeature X1 critical = Z + * 1\n"), (2, 27));
        assert_eq!(position("protected Z bernoulli x\n"), (1, 23));
        assert_eq!(position("protected Z bernoulli 0.5\nwidget W = 1\n"), (2, 1));
        assert_eq!(position("latent U bernoulli 0.5\n"), (1, 1));
    }

    #[test]
    fn validation_errors_surface() {
        let src = "protected Z bernoulli 0.5\nfeature X1 critical = X2\nfeature X2 general = Z\n";
        assert!(matches!(parse(src), Err(Error::Cycle(_))));
        assert!(matches!(
            parse("protected Z bernoulli 1.5\n"),
            Err(Error::InvalidScm(_))
        ));
    }
}
