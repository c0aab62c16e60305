//! Independent oracles and source transformations shared by the
//! integration and acceptance targets.

#![allow(dead_code)]

use std::path::PathBuf;

use ctses_core::lexer::{Token, TokenKind, TokenStream};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

/// Full-table LCS.
pub fn lcs_oracle(a: &[&str], b: &[&str]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t[a.len()][b.len()]
}

pub fn stream(kinds_and_texts: &[(TokenKind, &str)]) -> TokenStream {
    let mut s = TokenStream::from_words("");
    s.tokens = kinds_and_texts
        .iter()
        .enumerate()
        .map(|(i, (k, t))| Token::new(*k, *t, 1, i as u32 + 1))
        .collect();
    s
}

fn subtoken_key(text: &str) -> Vec<String> {
    // camelCase / snake_case / digits, lowercased, as a sorted set.
    let mut parts: Vec<String> = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        let boundary = if c == '_' || c == '$' {
            if !cur.is_empty() {
                parts.push(std::mem::take(&mut cur));
            }
            continue;
        } else if let Some(&p) = cur.chars().last().as_ref() {
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            (p.is_lowercase() && c.is_uppercase())
                || (p.is_uppercase() && c.is_uppercase() && next_lower)
                || (p.is_ascii_digit() != c.is_ascii_digit())
        } else {
            false
        };
        if boundary {
            parts.push(std::mem::take(&mut cur));
        }
        cur.push(c);
    }
    if !cur.is_empty() {
        parts.push(cur);
    }
    let mut key: Vec<String> = parts.into_iter().map(|p| p.to_lowercase()).collect();
    key.sort();
    key.dedup();
    key
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleAlignment {
    pub matches: Vec<(usize, usize)>,
    pub chunks: usize,
}

fn chunks_of(matches: &[(usize, usize)]) -> usize {
    let mut n = 0;
    for (k, &(i, j)) in matches.iter().enumerate() {
        let continues = k > 0 && {
            let (pi, pj) = matches[k - 1];
            pi + 1 == i && pj + 1 == j
        };
        if !continues {
            n += 1;
        }
    }
    n
}

/// Exhaustive METEOR alignment: among all injective matchings that use
/// the maximum number of exact pairs and then the maximum total, pick the
/// fewest chunks, then the lexicographically smallest reference index
/// sequence (a skipped candidate sorts after any index).
pub fn meteor_oracle(cand: &[Token], refs: &[Token]) -> OracleAlignment {
    let only_ident = |text: &str| {
        cand.iter()
            .chain(refs)
            .filter(|t| t.text == text)
            .all(|t| t.kind == TokenKind::Identifier)
    };
    let key = |t: &Token| -> Option<Vec<String>> {
        if !only_ident(&t.text) {
            return None;
        }
        let k = subtoken_key(&t.text);
        (!k.is_empty()).then_some(k)
    };
    let cand_keys: Vec<_> = cand.iter().map(key).collect();
    let ref_keys: Vec<_> = refs.iter().map(key).collect();

    // Per candidate position: the reference positions it may pair with,
    // and whether the pair is exact.
    let options: Vec<Vec<(usize, bool)>> = (0..cand.len())
        .map(|i| {
            (0..refs.len())
                .filter_map(|j| {
                    if cand[i].text == refs[j].text {
                        Some((j, true))
                    } else if cand_keys[i].is_some() && cand_keys[i] == ref_keys[j] {
                        Some((j, false))
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();

    let mut all: Vec<(usize, usize, Vec<Option<usize>>)> = Vec::new();
    let mut assign = vec![None; cand.len()];
    let mut used = vec![false; refs.len()];
    fn rec(
        i: usize,
        exact: usize,
        total: usize,
        options: &[Vec<(usize, bool)>],
        assign: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        all: &mut Vec<(usize, usize, Vec<Option<usize>>)>,
    ) {
        if i == options.len() {
            all.push((exact, total, assign.clone()));
            return;
        }
        for &(j, is_exact) in &options[i] {
            if !used[j] {
                used[j] = true;
                assign[i] = Some(j);
                rec(
                    i + 1,
                    exact + usize::from(is_exact),
                    total + 1,
                    options,
                    assign,
                    used,
                    all,
                );
                assign[i] = None;
                used[j] = false;
            }
        }
        rec(i + 1, exact, total, options, assign, used, all);
    }
    rec(0, 0, 0, &options, &mut assign, &mut used, &mut all);

    let best_exact = all.iter().map(|a| a.0).max().unwrap_or(0);
    let best_total = all
        .iter()
        .filter(|a| a.0 == best_exact)
        .map(|a| a.1)
        .max()
        .unwrap_or(0);
    let sort_key = |a: &Vec<Option<usize>>| -> Vec<usize> {
        a.iter().map(|x| x.unwrap_or(usize::MAX)).collect()
    };
    all.into_iter()
        .filter(|a| a.0 == best_exact && a.1 == best_total)
        .map(|(_, _, a)| {
            let matches: Vec<(usize, usize)> = a
                .iter()
                .enumerate()
                .filter_map(|(i, j)| j.map(|j| (i, j)))
                .collect();
            (chunks_of(&matches), sort_key(&a), matches)
        })
        .min()
        .map(|(chunks, _, matches)| OracleAlignment { matches, chunks })
        .unwrap_or(OracleAlignment {
            matches: Vec::new(),
            chunks: 0,
        })
}

/// Splits source into (is_literal, text) pieces so transformations can
/// leave string and character literals alone.
fn pieces(src: &str) -> Vec<(bool, String)> {
    let mut out: Vec<(bool, String)> = Vec::new();
    let mut chars = src.chars().peekable();
    let mut cur = String::new();
    while let Some(c) = chars.next() {
        if c == '"' || c == '\'' {
            if !cur.is_empty() {
                out.push((false, std::mem::take(&mut cur)));
            }
            let mut lit = String::from(c);
            while let Some(d) = chars.next() {
                lit.push(d);
                if d == '\\' {
                    if let Some(e) = chars.next() {
                        lit.push(e);
                    }
                } else if d == c {
                    break;
                }
            }
            out.push((true, lit));
        } else {
            cur.push(c);
        }
    }
    if !cur.is_empty() {
        out.push((false, cur));
    }
    out
}

/// Rewrites every whitespace run outside literals, keeping line breaks
/// where there were some so line comments still end.
pub fn reformat_whitespace(src: &str) -> String {
    let mut out = String::new();
    for (literal, text) in pieces(src) {
        if literal {
            out.push_str(&text);
            continue;
        }
        let mut run = String::new();
        let flush = |run: &mut String, out: &mut String| {
            if run.is_empty() {
                return;
            }
            if run.contains('\n') {
                out.push_str("\r\n\n\t \t");
            } else {
                out.push_str(" \t  ");
            }
            run.clear();
        };
        for c in text.chars() {
            if c.is_whitespace() {
                run.push(c);
            } else {
                flush(&mut run, &mut out);
                out.push(c);
            }
        }
        flush(&mut run, &mut out);
    }
    out
}

/// Renames whole identifiers outside literals.
pub fn rename_identifiers(src: &str, renames: &[(&str, &str)]) -> String {
    let mut out = String::new();
    for (literal, text) in pieces(src) {
        if literal {
            out.push_str(&text);
            continue;
        }
        let mut word = String::new();
        let flush = |word: &mut String, out: &mut String| {
            let replaced = renames
                .iter()
                .find(|(from, _)| *from == word.as_str())
                .map(|(_, to)| *to);
            out.push_str(replaced.unwrap_or(word));
            word.clear();
        };
        for c in text.chars() {
            if c.is_alphanumeric() || c == '_' || c == '$' {
                word.push(c);
            } else {
                flush(&mut word, &mut out);
                out.push(c);
            }
        }
        flush(&mut word, &mut out);
    }
    out
}
