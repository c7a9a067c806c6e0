//! Markdown code-fence stripping for model outputs.

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

fn is_closing_fence(line: &str) -> bool {
    let t = line.trim();
    t.len() >= 3 && t.bytes().all(|b| b == b'`')
}

/// One pass: contents of the longest fenced block, or `None` without fences.
/// An unterminated block runs to the end of the text (truncated generations).
fn largest_block(text: &str) -> Option<String> {
    let lines: Vec<&str> = text.lines().collect();
    let mut best: Option<String> = None;
    let mut i = 0;
    while i < lines.len() {
        if !is_fence(lines[i]) {
            i += 1;
            continue;
        }
        let start = i + 1;
        let mut end = start;
        while end < lines.len() && !is_closing_fence(lines[end]) {
            end += 1;
        }
        let block = lines[start..end].join("\n");
        if best.as_ref().is_none_or(|b| block.len() > b.len()) {
            best = Some(block);
        }
        i = end + 1;
    }
    best
}

/// Returns the contents of the largest fenced code block (first wins on ties),
/// or the input unchanged when it contains no fence. Applied to a fixpoint so
/// nested fences collapse and the function is idempotent.
pub fn strip_code_fences(text: &str) -> String {
    let mut current = text.to_string();
    while let Some(inner) = largest_block(&current) {
        if inner == current {
            break;
        }
        current = inner;
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_block() {
        assert_eq!(strip_code_fences("```js\ncode\n```"), "code");
        assert_eq!(
            strip_code_fences("Here you go:\n```python\na = 1\nb = 2\n```\nDone."),
            "a = 1\nb = 2"
        );
    }

    #[test]
    fn no_fence_is_identity() {
        let t = "const a = 1;\nconst b = 2;";
        assert_eq!(strip_code_fences(t), t);
    }

    #[test]
    fn longest_block_wins() {
        let t = "```\nshort\n```\ntext\n```js\nmuch longer block\n```";
        assert_eq!(strip_code_fences(t), "much longer block");
    }

    #[test]
    fn unterminated_block_runs_to_end() {
        assert_eq!(strip_code_fences("```js\nline1\nline2"), "line1\nline2");
    }

    #[test]
    fn empty_block() {
        assert_eq!(strip_code_fences("```\n```"), "");
    }

    proptest! {
        #[test]
        fn idempotent(s in "(```[a-z]{0,3}\n|[a-z ]{0,8}\n|`{1,4}){0,12}") {
            let once = strip_code_fences(&s);
            prop_assert_eq!(strip_code_fences(&once), once);
        }
    }
}
