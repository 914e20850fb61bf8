//! Rule-driven extraction of product cards from stored listing snapshots.
//!
//! The scanner is tolerant: it tokenizes opening tags (with attributes),
//! closing tags and text, and builds a loose element tree. Stray closing
//! tags are ignored, an unclosed element is closed when an enclosing
//! element closes, and void elements never take children. Character
//! references are left as-is so every extracted value stays a substring of
//! the snapshot.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::catalog::{CatalogRow, RawCatalog, CATALOG_HEADER, NUM_FEATURES};
use crate::error::{Error, Result};

/// Reserved field name of the rule that marks one product card.
pub const RECORD_FIELD: &str = "_record";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionRule {
    pub field_name: String,
    pub tag: String,
    pub attr_name: String,
    pub attr_value: String,
    /// Regular expression with exactly one capture group. Unused for the
    /// `_record` rule.
    #[serde(default)]
    pub value_pattern: String,
}

/// A validated rule set: the card boundary rule plus compiled field rules.
#[derive(Debug, Clone)]
pub struct RuleSet {
    record: ExtractionRule,
    fields: Vec<(ExtractionRule, Regex)>,
}

impl RuleSet {
    pub fn new(rules: Vec<ExtractionRule>) -> Result<Self> {
        let mut names = HashSet::new();
        let mut record = None;
        let mut fields = Vec::new();
        for rule in rules {
            if !names.insert(rule.field_name.clone()) {
                return Err(Error::Config(format!(
                    "duplicate extraction rule for field `{}`",
                    rule.field_name
                )));
            }
            if rule.tag.is_empty() {
                return Err(Error::Config(format!(
                    "rule `{}` has an empty tag",
                    rule.field_name
                )));
            }
            if rule.field_name == RECORD_FIELD {
                record = Some(rule);
                continue;
            }
            let re = Regex::new(&rule.value_pattern)
                .map_err(|e| Error::Config(format!("rule `{}` pattern: {e}", rule.field_name)))?;
            // captures_len counts the implicit whole-match group.
            if re.captures_len() != 2 {
                return Err(Error::Config(format!(
                    "rule `{}` pattern must have exactly one capture group, has {}",
                    rule.field_name,
                    re.captures_len() - 1
                )));
            }
            fields.push((rule, re));
        }
        let record = record.ok_or_else(|| {
            Error::Config(format!("rule set lacks the `{RECORD_FIELD}` boundary rule"))
        })?;
        Ok(Self { record, fields })
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rules: Vec<ExtractionRule> = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("rule file {}: {e}", path.display())))?;
        Self::new(rules)
    }

    pub fn field_names(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|(r, _)| r.field_name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RawRecord {
    pub source_file: String,
    pub fields: BTreeMap<String, String>,
}

const VOID_ELEMENTS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];

#[derive(Debug)]
struct Element {
    tag: String,
    attrs: Vec<(String, String)>,
    children: Vec<Node>,
}

#[derive(Debug)]
enum Node {
    Element(Element),
    Text(String),
}

impl Element {
    fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    fn matches(&self, rule: &ExtractionRule) -> bool {
        self.tag.eq_ignore_ascii_case(&rule.tag)
            && self.attr(&rule.attr_name.to_ascii_lowercase()) == Some(rule.attr_value.as_str())
    }

    fn text(&self) -> String {
        let mut out = String::new();
        collect_text(&self.children, &mut out);
        out
    }

    /// First descendant in document (pre-)order matching `rule`.
    fn find_descendant(&self, rule: &ExtractionRule) -> Option<&Element> {
        for child in &self.children {
            if let Node::Element(e) = child {
                if e.matches(rule) {
                    return Some(e);
                }
                if let Some(found) = e.find_descendant(rule) {
                    return Some(found);
                }
            }
        }
        None
    }
}

fn collect_text(nodes: &[Node], out: &mut String) {
    for n in nodes {
        match n {
            Node::Text(t) => out.push_str(t),
            Node::Element(e) => collect_text(&e.children, out),
        }
    }
}

enum Token<'a> {
    Open {
        tag: String,
        attrs: Vec<(String, String)>,
        self_closing: bool,
    },
    Close(String),
    Text(&'a str),
}

/// Splits markup into tags and text. Comments, doctypes and processing
/// instructions are skipped; the contents of `script`/`style` are dropped.
fn tokenize(html: &str) -> Vec<Token<'_>> {
    let bytes = html.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    let mut text_start = 0;
    while pos < bytes.len() {
        if bytes[pos] != b'<' {
            pos += 1;
            continue;
        }
        let rest = &html[pos..];
        let next = bytes.get(pos + 1).copied().unwrap_or(b' ');
        let is_tag = next.is_ascii_alphabetic() || next == b'/' || next == b'!' || next == b'?';
        if !is_tag {
            pos += 1;
            continue;
        }
        if text_start < pos {
            tokens.push(Token::Text(&html[text_start..pos]));
        }
        if rest.starts_with("<!--") {
            pos += rest.find("-->").map_or(rest.len(), |i| i + 3);
            text_start = pos;
            continue;
        }
        let end = match find_tag_end(rest) {
            Some(e) => e,
            None => {
                // Unterminated tag: the rest is treated as text.
                tokens.push(Token::Text(rest));
                text_start = bytes.len();
                break;
            }
        };
        let inner = &rest[1..end];
        pos += end + 1;
        text_start = pos;
        if next == b'!' || next == b'?' {
            continue;
        }
        if let Some(name) = inner.strip_prefix('/') {
            tokens.push(Token::Close(name.trim().to_ascii_lowercase()));
            continue;
        }
        let (tag, attrs, self_closing) = parse_open_tag(inner);
        if tag == "script" || tag == "style" {
            let close = format!("</{tag}");
            let lower = html[pos..].to_ascii_lowercase();
            let skip = lower.find(&close).unwrap_or(lower.len());
            pos += skip;
            text_start = pos;
            tokens.push(Token::Open {
                tag,
                attrs,
                self_closing,
            });
            continue;
        }
        tokens.push(Token::Open {
            tag,
            attrs,
            self_closing,
        });
    }
    if text_start < bytes.len() {
        tokens.push(Token::Text(&html[text_start..]));
    }
    tokens
}

/// Index of the `>` closing the tag that starts at `s[0] == '<'`, skipping
/// quoted attribute values.
fn find_tag_end(s: &str) -> Option<usize> {
    let mut quote = None;
    for (i, c) in s.char_indices().skip(1) {
        match (quote, c) {
            (None, '"' | '\'') => quote = Some(c),
            (Some(q), c) if c == q => quote = None,
            (None, '>') => return Some(i),
            _ => {}
        }
    }
    None
}

fn parse_open_tag(inner: &str) -> (String, Vec<(String, String)>, bool) {
    let self_closing = inner.trim_end().ends_with('/');
    let inner = inner.trim_end().trim_end_matches('/');
    let name_end = inner
        .find(|c: char| c.is_whitespace())
        .unwrap_or(inner.len());
    let tag = inner[..name_end].to_ascii_lowercase();
    let mut attrs = Vec::new();
    let mut rest = inner[name_end..].trim_start();
    while !rest.is_empty() {
        let key_end = rest
            .find(|c: char| c.is_whitespace() || c == '=')
            .unwrap_or(rest.len());
        let key = rest[..key_end].to_ascii_lowercase();
        rest = rest[key_end..].trim_start();
        let mut value = String::new();
        if let Some(after_eq) = rest.strip_prefix('=') {
            let after_eq = after_eq.trim_start();
            let mut chars = after_eq.chars();
            match chars.next() {
                Some(q @ ('"' | '\'')) => {
                    let body = &after_eq[1..];
                    let close = body.find(q).unwrap_or(body.len());
                    value = body[..close].to_string();
                    rest = body.get(close + 1..).unwrap_or("");
                }
                Some(_) => {
                    let end = after_eq.find(char::is_whitespace).unwrap_or(after_eq.len());
                    value = after_eq[..end].to_string();
                    rest = &after_eq[end..];
                }
                None => rest = "",
            }
        }
        if !key.is_empty() {
            attrs.push((key, value));
        }
        rest = rest.trim_start();
    }
    (tag, attrs, self_closing)
}

fn build_tree(tokens: Vec<Token<'_>>) -> Vec<Node> {
    // Stack of open elements; index 0 is a synthetic root.
    let mut stack: Vec<Element> = vec![Element {
        tag: String::new(),
        attrs: Vec::new(),
        children: Vec::new(),
    }];
    for tok in tokens {
        match tok {
            Token::Text(t) => stack
                .last_mut()
                .expect("root is never popped")
                .children
                .push(Node::Text(t.to_string())),
            Token::Open {
                tag,
                attrs,
                self_closing,
            } => {
                let el = Element {
                    tag,
                    attrs,
                    children: Vec::new(),
                };
                if self_closing || VOID_ELEMENTS.contains(&el.tag.as_str()) {
                    stack
                        .last_mut()
                        .expect("root is never popped")
                        .children
                        .push(Node::Element(el));
                } else {
                    stack.push(el);
                }
            }
            Token::Close(name) => {
                let Some(depth) = stack.iter().skip(1).rposition(|e| e.tag == name) else {
                    continue;
                };
                // rposition over skip(1) is relative to index 1.
                let target = depth + 1;
                while stack.len() > target {
                    let done = stack.pop().expect("len > target >= 1");
                    stack
                        .last_mut()
                        .expect("root is never popped")
                        .children
                        .push(Node::Element(done));
                }
            }
        }
    }
    while stack.len() > 1 {
        let done = stack.pop().expect("len > 1");
        stack
            .last_mut()
            .expect("root is never popped")
            .children
            .push(Node::Element(done));
    }
    stack.pop().expect("root").children
}

fn collect_cards<'a>(nodes: &'a [Node], rule: &ExtractionRule, out: &mut Vec<&'a Element>) {
    for n in nodes {
        if let Node::Element(e) = n {
            if e.matches(rule) {
                // Cards do not nest; a card's subtree belongs to it alone.
                out.push(e);
            } else {
                collect_cards(&e.children, rule, out);
            }
        }
    }
}

/// One [`RawRecord`] per product card in document order.
pub fn parse_snapshot(html: &str, rules: &RuleSet, source_file: &str) -> Vec<RawRecord> {
    let tree = build_tree(tokenize(html));
    let mut cards = Vec::new();
    collect_cards(&tree, &rules.record, &mut cards);
    cards
        .into_iter()
        .map(|card| {
            let mut fields = BTreeMap::new();
            for (rule, re) in &rules.fields {
                let value = card
                    .find_descendant(rule)
                    .map(|el| el.text())
                    .and_then(|text| {
                        re.captures(&text)
                            .and_then(|c| c.get(1))
                            .map(|m| m.as_str().trim().to_string())
                    });
                if let Some(v) = value {
                    fields.insert(rule.field_name.clone(), v);
                }
            }
            RawRecord {
                source_file: source_file.to_string(),
                fields,
            }
        })
        .collect()
}

/// Parses every regular file in `dir` in lexicographic filename order.
pub fn extract_corpus(dir: &Path, rules: &RuleSet) -> Result<Vec<RawRecord>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.is_file())
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    let mut out = Vec::new();
    for path in files {
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let html = String::from_utf8_lossy(&bytes);
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        out.extend(parse_snapshot(&html, rules, &name));
    }
    Ok(out)
}

/// Maps extracted fields onto catalog columns by name. Thousands separators
/// are stripped from numeric cells; an unparseable numeric cell becomes a
/// missing value, left for cleaning to drop. Records without an `id` field
/// get `<file stem>-<n>`, numbered per source file.
pub fn to_catalog(records: &[RawRecord]) -> RawCatalog {
    let mut per_file: BTreeMap<&str, usize> = BTreeMap::new();
    let rows = records
        .iter()
        .map(|r| {
            let n = per_file.entry(r.source_file.as_str()).or_insert(0);
            *n += 1;
            let id = r.fields.get("id").cloned().unwrap_or_else(|| {
                let stem = r
                    .source_file
                    .rsplit_once('.')
                    .map_or(r.source_file.as_str(), |(s, _)| s);
                format!("{stem}-{n}")
            });
            let num = |col: &str| -> Option<f64> {
                r.fields
                    .get(col)
                    .map(|v| v.replace(',', ""))
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .filter(|v| v.is_finite() && *v >= 0.0)
            };
            let mut features = [None; NUM_FEATURES];
            for (slot, col) in features.iter_mut().zip(&CATALOG_HEADER[2..7]) {
                *slot = num(col);
            }
            CatalogRow {
                id,
                name: r.fields.get("name").cloned().unwrap_or_default(),
                features,
                original_price: num("original_price").filter(|p| *p > 0.0),
                sale_price: num("sale_price").filter(|p| *p > 0.0),
            }
        })
        .collect();
    RawCatalog {
        rows,
        provenance: "snapshot extraction".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(field: &str, tag: &str, class: &str, pattern: &str) -> ExtractionRule {
        ExtractionRule {
            field_name: field.into(),
            tag: tag.into(),
            attr_name: "class".into(),
            attr_value: class.into(),
            value_pattern: pattern.into(),
        }
    }

    fn rules() -> RuleSet {
        RuleSet::new(vec![
            rule(RECORD_FIELD, "div", "card", ""),
            rule("name", "a", "title", r"(\S.*\S)"),
            rule("ram_gb", "li", "ram", r"([0-9.]+)\s*GB"),
            rule("original_price", "span", "mrp", r"([0-9][0-9,]*)$"),
        ])
        .unwrap()
    }

    const TWO_CARDS: &str = r#"<html><body>
<div class="card"><a class="title" href="/x">Alpha One</a>
  <ul><li class="ram">4 GB RAM</li><li class="ram">8 GB RAM</li></ul>
  <span class="mrp">&#8377; 4,399</span></div>
<div class="card"><a class="title">Beta Two</a><ul><li class="ram">N/A</li></ul>
  <span class=mrp>12,999</span><br></div>
</body></html>"#;

    #[test]
    fn parses_cards_first_match_wins() {
        let recs = parse_snapshot(TWO_CARDS, &rules(), "a.html");
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].fields["name"], "Alpha One");
        assert_eq!(recs[0].fields["ram_gb"], "4");
        assert_eq!(recs[0].fields["original_price"], "4,399");
        assert_eq!(recs[1].fields["name"], "Beta Two");
        assert!(!recs[1].fields.contains_key("ram_gb"));
        assert_eq!(recs[1].fields["original_price"], "12,999");
        for r in &recs {
            for v in r.fields.values() {
                assert!(TWO_CARDS.contains(v.as_str()));
            }
        }
    }

    #[test]
    fn empty_html_has_no_records() {
        assert!(parse_snapshot("", &rules(), "e.html").is_empty());
    }

    #[test]
    fn tolerates_tag_soup() {
        let html = r#"<div class="card"><p><a class="title">Gamma</p></b>
<li class="ram">6 GB<div class="card"><a class="title">Delta</a>"#;
        let recs = parse_snapshot(html, &rules(), "s.html");
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].fields["name"], "Gamma");
    }

    #[test]
    fn skips_comments_and_scripts() {
        let html = r#"<!-- <div class="card"> --><script>var s = "<div class='card'>";</script>
<div class="card"><a class="title">Only</a></div>"#;
        let recs = parse_snapshot(html, &rules(), "c.html");
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].fields["name"], "Only");
    }

    #[test]
    fn malformed_rule_sets() {
        let dup = RuleSet::new(vec![
            rule(RECORD_FIELD, "div", "card", ""),
            rule("name", "a", "t", "(.*)"),
            rule("name", "b", "t", "(.*)"),
        ]);
        assert!(matches!(dup, Err(Error::Config(_))));
        let no_record = RuleSet::new(vec![rule("name", "a", "t", "(.*)")]);
        assert!(matches!(no_record, Err(Error::Config(_))));
        let two_groups = RuleSet::new(vec![
            rule(RECORD_FIELD, "div", "card", ""),
            rule("name", "a", "t", "(a)(b)"),
        ]);
        assert!(matches!(two_groups, Err(Error::Config(_))));
        let zero_groups = RuleSet::new(vec![
            rule(RECORD_FIELD, "div", "card", ""),
            rule("name", "a", "t", "ab"),
        ]);
        assert!(matches!(zero_groups, Err(Error::Config(_))));
    }

    #[test]
    fn corpus_is_lexicographic_and_missing_dir_errors() {
        let dir = tempfile::tempdir().unwrap();
        let card = |n: &str| format!(r#"<div class="card"><a class="title">{n}</a></div>"#);
        std::fs::write(dir.path().join("b.html"), card("From B")).unwrap();
        std::fs::write(dir.path().join("a.html"), card("From A")).unwrap();
        let recs = extract_corpus(dir.path(), &rules()).unwrap();
        assert_eq!(recs[0].fields["name"], "From A");
        assert_eq!(recs[1].fields["name"], "From B");

        let empty = tempfile::tempdir().unwrap();
        assert!(extract_corpus(empty.path(), &rules()).unwrap().is_empty());
        assert!(matches!(
            extract_corpus(&dir.path().join("nope"), &rules()),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn catalog_mapping_strips_separators_and_numbers_ids() {
        let recs = parse_snapshot(TWO_CARDS, &rules(), "page.html");
        let cat = to_catalog(&recs);
        assert_eq!(cat.rows[0].id, "page-1");
        assert_eq!(cat.rows[1].id, "page-2");
        assert_eq!(cat.rows[1].original_price, Some(12999.0));
        assert_eq!(cat.rows[1].features[0], None);
    }
}
