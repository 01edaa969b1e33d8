use std::sync::OnceLock;

use regex::{Regex, RegexBuilder};

use super::AnnotateError;
use crate::model::registrable_domain;

/// Translation hook applied to extracted text.
pub trait Translator: Send + Sync {
    fn translate(&self, text: &str) -> String;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct IdentityTranslation;

impl Translator for IdentityTranslation {
    fn translate(&self, text: &str) -> String {
        text.to_string()
    }
}

struct Patterns {
    title: Regex,
    body: Regex,
    drop: Regex,
    tag: Regex,
    blank: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        title: Regex::new(r"(?is)<title[^>]*>(.*?)</title>").expect("static regex"),
        body: Regex::new(r"(?is)<body[^>]*>(.*)</body>").expect("static regex"),
        drop: Regex::new(r"(?is)<(script|style|head|nav|header|footer|aside)\b[^>]*>.*?</(script|style|head|nav|header|footer|aside)>")
            .expect("static regex"),
        tag: Regex::new(r"(?s)<[^>]*>").expect("static regex"),
        blank: Regex::new(r"[ \t\u{a0}]+").expect("static regex"),
    })
}

fn unescape(s: &str) -> String {
    s.replace("&nbsp;", " ")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&amp;", "&")
}

fn clean(fragment: &str) -> String {
    let p = patterns();
    let text = p.tag.replace_all(fragment, "\n");
    unescape(&text)
        .lines()
        .map(|l| p.blank.replace_all(l.trim(), " ").into_owned())
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

fn strip_domains(text: &str, url: &str) -> String {
    let mut needles = Vec::new();
    if let Some(host) = url::Url::parse(url).ok().and_then(|u| u.host_str().map(str::to_string)) {
        needles.push(host);
    }
    if let Ok(d) = registrable_domain(url) {
        needles.push(d);
    }
    // longest first so a host is removed whole before its registrable suffix
    needles.sort_by_key(|n| std::cmp::Reverse(n.len()));
    needles.dedup();
    let mut out = text.to_string();
    for n in needles {
        let re = RegexBuilder::new(&format!(r"(https?://)?{}(/\S*)?", regex::escape(&n)))
            .case_insensitive(true)
            .build()
            .expect("escaped pattern");
        out = re.replace_all(&out, "").into_owned();
    }
    let blank = &patterns().blank;
    out.lines().map(|l| blank.replace_all(l.trim(), " ").into_owned()).collect::<Vec<_>>().join("\n")
}

/// Extracts `title\n\nbody` from a page with boilerplate and every mention of
/// the source domain removed.
pub fn prepare_article(url: &str, raw_html: &str) -> Result<String, AnnotateError> {
    prepare_article_with(url, raw_html, &IdentityTranslation)
}

pub fn prepare_article_with(url: &str, raw_html: &str, translator: &dyn Translator) -> Result<String, AnnotateError> {
    let p = patterns();
    let title = p.title.captures(raw_html).map(|c| clean(&c[1])).unwrap_or_default();
    let body_src = p.body.captures(raw_html).map_or(raw_html, |c| c.get(1).expect("group 1").as_str());
    let body_src = p.drop.replace_all(body_src, "");
    let body = strip_domains(&clean(&body_src), url);
    let body = body.trim();
    if body.is_empty() {
        return Err(AnnotateError::EmptyArticle(url.to_string()));
    }
    let title = strip_domains(&title, url);
    let text = if title.trim().is_empty() { body.to_string() } else { format!("{}\n\n{body}", title.trim()) };
    Ok(translator.translate(&text))
}
