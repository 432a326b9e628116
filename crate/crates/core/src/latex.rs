//! LaTeX source to plain text.
//!
//! Only the first section of a document becomes the passage; the abstract
//! is retained in passage metadata for the summary extractor. Math becomes
//! `[MATH]`, citations `[CITE]`, cross-references `[REF]`; comments are
//! stripped. Unknown macros with arguments unwrap to their last mandatory
//! argument, unknown zero-argument macros are dropped, so prose survives
//! without a macro database.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::passage::{Passage, DEFAULT_MAX_WORDS};
use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LatexError {
    #[error("document body produced no text")]
    EmptyBody,
    #[error("unbalanced group starting near byte {0}")]
    UnbalancedGroup(usize),
    #[error("unterminated math starting near byte {0}")]
    UnterminatedMath(usize),
    #[error("unterminated environment `{0}`")]
    UnterminatedEnvironment(String),
}

const MATH_ENVIRONMENTS: &[&str] = &[
    "equation", "equation*", "align", "align*", "gather", "gather*", "eqnarray", "eqnarray*",
    "multline", "multline*", "displaymath", "math", "alignat", "alignat*",
];

// Environments whose content never belongs in a prose passage.
const DROP_ENVIRONMENTS: &[&str] = &[
    "figure", "figure*", "table", "table*", "tabular", "tabular*", "tikzpicture", "algorithm",
    "algorithmic", "algorithm2e", "lstlisting", "verbatim", "comment", "thebibliography",
];

const CITE_MACROS: &[&str] =
    &["cite", "citet", "citep", "citealp", "citealt", "citeauthor", "citeyear", "citeyearpar"];

const REF_MACROS: &[&str] = &["ref", "eqref", "autoref", "cref", "Cref", "pageref"];

// Macros consumed together with their arguments, emitting nothing.
const DROP_MACROS: &[&str] = &[
    "label", "footnote", "footnotetext", "vspace", "hspace", "includegraphics", "bibliography",
    "bibliographystyle", "input", "include", "usepackage", "documentclass", "setlength",
    "pagestyle", "thispagestyle", "thanks", "author", "date", "caption", "newcommand",
    "renewcommand", "def", "graphicspath", "affiliation", "email",
];

/// Convert a full `.tex` source into the first-section passage.
///
/// Falls back to the first 1800 words of body text when the document has
/// no `\section`. The abstract, when present, lands in `meta["abstract"]`.
pub fn latex_to_passage(doc_id: &str, source: &str) -> Result<Passage, LatexError> {
    let stripped = strip_comments(source);
    let body = document_body(&stripped);

    let abstract_text = extract_environment(&stripped, "abstract")
        .map(|raw| clean(&raw))
        .transpose()?
        .map(|t| tidy_whitespace(&t))
        .filter(|t| !t.is_empty());

    let (raw_section, label) = match first_section(body) {
        Some(section) => (section.to_owned(), "introduction"),
        None => (body.to_owned(), "body"),
    };
    let mut cleaned = tidy_whitespace(&clean(&raw_section)?);
    if label == "body" {
        cleaned = text::first_words(&cleaned, DEFAULT_MAX_WORDS);
    }
    if text::word_count(&cleaned) == 0 {
        return Err(LatexError::EmptyBody);
    }

    let mut passage = Passage::from_text(doc_id, label, &cleaned);
    if let Some(abs) = abstract_text {
        passage.meta.insert("abstract".to_owned(), abs);
    }
    Ok(passage)
}

/// Remove `%` comments (respecting `\%`) line by line.
fn strip_comments(source: &str) -> String {
    let mut out = String::with_capacity(source.len());
    for line in source.split_inclusive('\n') {
        let mut prev_backslash = false;
        let mut cut = line.len();
        for (i, ch) in line.char_indices() {
            if ch == '%' && !prev_backslash {
                cut = i;
                break;
            }
            prev_backslash = ch == '\\' && !prev_backslash;
        }
        out.push_str(&line[..cut]);
        if cut < line.len() && line.ends_with('\n') {
            out.push('\n');
        }
    }
    out
}

fn document_body(source: &str) -> &str {
    let start = source
        .find("\\begin{document}")
        .map(|i| i + "\\begin{document}".len())
        .unwrap_or(0);
    let end = source.find("\\end{document}").unwrap_or(source.len());
    if start <= end {
        &source[start..end]
    } else {
        source
    }
}

/// Raw content of `\begin{name}...\end{name}`, first occurrence.
fn extract_environment<'a>(source: &'a str, name: &str) -> Option<&'a str> {
    let open = format!("\\begin{{{name}}}");
    let close = format!("\\end{{{name}}}");
    let start = source.find(&open)? + open.len();
    let end = source[start..].find(&close)? + start;
    Some(&source[start..end])
}

fn is_section_command(source: &str, at: usize) -> bool {
    let rest = &source[at..];
    for head in ["\\section", "\\appendix", "\\bibliography", "\\begin{thebibliography}"] {
        if let Some(tail) = rest.strip_prefix(head) {
            if head == "\\section" {
                // Avoid matching \sectionmark etc.
                let next = tail.chars().next();
                if matches!(next, Some('{') | Some('*') | Some(' ') | Some('\n') | None) {
                    return true;
                }
            } else {
                return true;
            }
        }
    }
    false
}

/// Content between the first `\section{...}` and the next sectioning
/// command, title excluded.
fn first_section(body: &str) -> Option<&str> {
    let mut search = 0;
    let start = loop {
        let rel = body[search..].find("\\section")?;
        let at = search + rel;
        if is_section_command(body, at) {
            break at;
        }
        search = at + "\\section".len();
    };
    // Skip past "\section", optional '*', and the {title} group.
    let mut i = start + "\\section".len();
    let bytes = body.as_bytes();
    if bytes.get(i) == Some(&b'*') {
        i += 1;
    }
    while bytes.get(i).is_some_and(|b| b.is_ascii_whitespace()) {
        i += 1;
    }
    if bytes.get(i) == Some(&b'{') {
        let mut depth = 0usize;
        for (off, ch) in body[i..].char_indices() {
            match ch {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        i += off + 1;
                        break;
                    }
                }
                _ => {}
            }
        }
    }
    let mut end = body.len();
    let mut scan = i;
    while scan < body.len() {
        if let Some(rel) = body[scan..].find('\\') {
            let at = scan + rel;
            if is_section_command(body, at) {
                end = at;
                break;
            }
            scan = at + 1;
        } else {
            break;
        }
    }
    Some(&body[i..end])
}

/// Inline LaTeX-to-text conversion of a comment-stripped fragment.
fn clean(fragment: &str) -> Result<String, LatexError> {
    let chars: Vec<(usize, char)> = fragment.char_indices().collect();
    let mut out = String::with_capacity(fragment.len());
    let mut i = 0usize;
    while i < chars.len() {
        let (off, ch) = chars[i];
        match ch {
            '\\' => {
                let next = chars.get(i + 1).map(|&(_, c)| c);
                match next {
                    Some('\\') => {
                        out.push('\n');
                        i += 2;
                    }
                    Some('[') => {
                        let close = fragment[off..]
                            .find("\\]")
                            .ok_or(LatexError::UnterminatedMath(off))?;
                        out.push_str("[MATH]");
                        i = index_at(&chars, off + close + 2);
                    }
                    Some('(') => {
                        let close = fragment[off..]
                            .find("\\)")
                            .ok_or(LatexError::UnterminatedMath(off))?;
                        out.push_str("[MATH]");
                        i = index_at(&chars, off + close + 2);
                    }
                    Some(c) if c.is_ascii_alphabetic() => {
                        i = handle_macro(fragment, &chars, i, &mut out)?;
                    }
                    Some(c) => {
                        // Escaped special character.
                        out.push(c);
                        i += 2;
                    }
                    None => {
                        i += 1;
                    }
                }
            }
            '$' => {
                let double = chars.get(i + 1).map(|&(_, c)| c) == Some('$');
                let (open_len, closer) = if double { (2, "$$") } else { (1, "$") };
                let from = off + open_len;
                let close = find_unescaped(fragment, from, closer)
                    .ok_or(LatexError::UnterminatedMath(off))?;
                out.push_str("[MATH]");
                i = index_at(&chars, close + closer.len());
            }
            '~' => {
                out.push(' ');
                i += 1;
            }
            '{' | '}' => {
                // Bare grouping braces vanish.
                i += 1;
            }
            _ => {
                out.push(ch);
                i += 1;
            }
        }
    }
    Ok(out)
}

/// Index into `chars` of the char at byte offset `byte` (or the end).
fn index_at(chars: &[(usize, char)], byte: usize) -> usize {
    chars.partition_point(|&(off, _)| off < byte)
}

fn find_unescaped(text: &str, from: usize, needle: &str) -> Option<usize> {
    let mut search = from;
    while let Some(rel) = text[search..].find(needle) {
        let at = search + rel;
        if at == 0 || text.as_bytes()[at - 1] != b'\\' {
            return Some(at);
        }
        search = at + needle.len();
    }
    None
}

/// Parse a control word at `chars[i]` (a backslash), dispatch on its name,
/// and return the index to resume scanning at.
fn handle_macro(
    fragment: &str,
    chars: &[(usize, char)],
    i: usize,
    out: &mut String,
) -> Result<usize, LatexError> {
    let mut j = i + 1;
    let name_start = j;
    while j < chars.len() && chars[j].1.is_ascii_alphabetic() {
        j += 1;
    }
    let name: String = chars[name_start..j].iter().map(|&(_, c)| c).collect();
    if j < chars.len() && chars[j].1 == '*' {
        j += 1;
    }

    if name == "begin" {
        let (env, after) = read_group_text(fragment, chars, j)?;
        let env = env.trim();
        if MATH_ENVIRONMENTS.contains(&env) {
            let end_at = skip_environment(fragment, chars, after, env)?;
            out.push_str("[MATH]");
            return Ok(end_at);
        }
        if DROP_ENVIRONMENTS.contains(&env) {
            return skip_environment(fragment, chars, after, env);
        }
        // Transparent environment: keep scanning its content inline.
        return Ok(after);
    }
    if name == "end" {
        let (_, after) = read_group_text(fragment, chars, j)?;
        return Ok(after);
    }
    if name == "item" {
        // Skip an optional [label].
        let after = skip_optional_args(chars, j);
        out.push_str("\n- ");
        return Ok(after);
    }

    // Optional [..] arguments are skipped for every macro.
    let mut k = skip_optional_args(chars, j);

    // Collect mandatory {..} groups.
    let mut groups: Vec<(usize, usize)> = Vec::new();
    while k < chars.len() && chars[k].1 == '{' {
        let (content_span, after) = read_group_span(fragment, chars, k)?;
        groups.push(content_span);
        k = skip_optional_args(chars, after);
    }

    if CITE_MACROS.contains(&name.as_str()) {
        out.push_str("[CITE]");
        return Ok(k);
    }
    if REF_MACROS.contains(&name.as_str()) {
        out.push_str("[REF]");
        return Ok(k);
    }
    if DROP_MACROS.contains(&name.as_str()) {
        return Ok(k);
    }
    match groups.last() {
        Some(&(s, e)) => {
            // Unwrap to the last mandatory argument.
            out.push_str(&clean(&fragment[s..e])?);
        }
        None => {
            // Zero-argument unknown macro: dropped. A control word also eats
            // the single space that follows it.
            if k < chars.len() && chars[k].1 == ' ' {
                k += 1;
            }
        }
    }
    Ok(k)
}

fn skip_optional_args(chars: &[(usize, char)], mut k: usize) -> usize {
    while k < chars.len() && chars[k].1 == '[' {
        let mut depth = 0usize;
        while k < chars.len() {
            match chars[k].1 {
                '[' => depth += 1,
                ']' => {
                    depth -= 1;
                    if depth == 0 {
                        k += 1;
                        break;
                    }
                }
                _ => {}
            }
            k += 1;
        }
    }
    k
}

/// Read a `{...}` group starting at `chars[k]`; returns the byte span of
/// the content and the index after the closing brace.
fn read_group_span(
    fragment: &str,
    chars: &[(usize, char)],
    k: usize,
) -> Result<((usize, usize), usize), LatexError> {
    debug_assert_eq!(chars[k].1, '{');
    let open_off = chars[k].0;
    let mut depth = 0usize;
    let mut m = k;
    while m < chars.len() {
        match chars[m].1 {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    let content = (open_off + 1, chars[m].0);
                    return Ok((content, m + 1));
                }
            }
            _ => {}
        }
        m += 1;
    }
    let _ = fragment;
    Err(LatexError::UnbalancedGroup(open_off))
}

fn read_group_text(
    fragment: &str,
    chars: &[(usize, char)],
    k: usize,
) -> Result<(String, usize), LatexError> {
    if k >= chars.len() || chars[k].1 != '{' {
        return Err(LatexError::UnbalancedGroup(chars.get(k).map(|&(o, _)| o).unwrap_or(0)));
    }
    let ((s, e), after) = read_group_span(fragment, chars, k)?;
    Ok((fragment[s..e].to_owned(), after))
}

/// Skip to just past `\end{env}`, tolerating nested same-name environments.
fn skip_environment(
    fragment: &str,
    chars: &[(usize, char)],
    from: usize,
    env: &str,
) -> Result<usize, LatexError> {
    let open = format!("\\begin{{{env}}}");
    let close = format!("\\end{{{env}}}");
    let mut depth = 1usize;
    let mut at = chars.get(from).map(|&(o, _)| o).unwrap_or(fragment.len());
    loop {
        let next_close = fragment[at..].find(&close);
        let next_open = fragment[at..].find(&open);
        match (next_open, next_close) {
            (Some(o), Some(c)) if o < c => {
                depth += 1;
                at += o + open.len();
            }
            (_, Some(c)) => {
                depth -= 1;
                at += c + close.len();
                if depth == 0 {
                    return Ok(index_at(chars, at));
                }
            }
            (_, None) => {
                return Err(LatexError::UnterminatedEnvironment(String::from(env)));
            }
        }
    }
}

/// Collapse runs of blank lines to one, trim line edges and the ends.
fn tidy_whitespace(text: &str) -> String {
    let mut paragraphs: Vec<String> = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            if !current.is_empty() {
                paragraphs.push(current.join(" "));
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        paragraphs.push(current.join(" "));
    }
    let joined = paragraphs.join("\n\n");
    collapse_spaces(&joined)
}

fn collapse_spaces(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev_space = false;
    for ch in text.chars() {
        if ch == ' ' {
            if !prev_space {
                out.push(' ');
            }
            prev_space = true;
        } else {
            prev_space = false;
            out.push(ch);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r"\documentclass{article}
\begin{document}
\maketitle
\begin{abstract}
We study widgets. % inline comment
Widgets are useful.
\end{abstract}
\section{Introduction}
Widgets \textbf{matter} a lot \cite{smith2020}.
The loss $L = x^2$ is shown in Fig.~\ref{fig:loss}.
\section{Method}
Hidden method text.
\end{document}
";

    #[test]
    fn first_section_only_with_tokens() {
        let p = latex_to_passage("d", DOC).unwrap();
        assert_eq!(p.section_label, "introduction");
        assert!(p.text.contains("Widgets matter a lot [CITE]."));
        assert!(p.text.contains("[MATH]"));
        assert!(p.text.contains("[REF]"));
        assert!(!p.text.contains("Hidden method text"));
        assert!(!p.text.contains("Introduction"));
        assert_eq!(p.meta.get("abstract").unwrap(), "We study widgets. Widgets are useful.");
    }

    #[test]
    fn formatting_macros_unwrap() {
        let p = latex_to_passage("d", r"\section{A} The \textbf{loss} and \emph{gain}.").unwrap();
        assert_eq!(p.text, "The loss and gain.");
    }

    #[test]
    fn empty_body_is_an_error() {
        assert_eq!(latex_to_passage("d", ""), Err(LatexError::EmptyBody));
        assert_eq!(
            latex_to_passage("d", "\\begin{document}\\end{document}"),
            Err(LatexError::EmptyBody)
        );
    }

    #[test]
    fn no_section_falls_back_to_body() {
        let p = latex_to_passage("d", "\\begin{document}Just some plain prose here.\\end{document}")
            .unwrap();
        assert_eq!(p.section_label, "body");
        assert_eq!(p.text, "Just some plain prose here.");
    }

    #[test]
    fn unterminated_math_is_an_error() {
        let res = latex_to_passage("d", r"\section{A} Bad $x math");
        assert!(matches!(res, Err(LatexError::UnterminatedMath(_))));
    }

    #[test]
    fn figures_and_equations_handled() {
        let src = r"\section{A}
Before.
\begin{figure}\includegraphics{x.png}\caption{Nope}\end{figure}
\begin{equation} e = mc^2 \end{equation}
After.";
        let p = latex_to_passage("d", src).unwrap();
        assert!(!p.text.contains("Nope"));
        assert!(p.text.contains("[MATH]"));
        assert!(p.text.contains("Before."));
        assert!(p.text.contains("After."));
    }

    #[test]
    fn comments_stripped_but_escaped_percent_kept() {
        let p = latex_to_passage("d", "\\section{A} Gain of 5\\% achieved. % secret").unwrap();
        assert_eq!(p.text, "Gain of 5% achieved.");
    }
}
