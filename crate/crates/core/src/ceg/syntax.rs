//! Syntax-tree providers for the structural code features.

use super::lexer::{tokenize, Token, TokenKind};
use super::CegError;

/// Rooted tree of typed nodes; `parents[0]` is `None` for the root and every
/// other entry points to an earlier node.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SyntaxTree {
    pub kinds: Vec<String>,
    pub parents: Vec<Option<usize>>,
}

impl SyntaxTree {
    pub fn new(root_kind: &str) -> Self {
        SyntaxTree {
            kinds: vec![root_kind.to_string()],
            parents: vec![None],
        }
    }

    pub fn add(&mut self, kind: &str, parent: usize) -> usize {
        assert!(parent < self.kinds.len(), "parent must exist");
        self.kinds.push(kind.to_string());
        self.parents.push(Some(parent));
        self.kinds.len() - 1
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parents
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (p, i)))
            .collect()
    }

    pub fn count_kind(&self, kind: &str) -> usize {
        self.kinds.iter().filter(|k| *k == kind).count()
    }
}

/// Parses code into a [`SyntaxTree`]. Nodes of kind `"parameter"` are counted
/// as function parameters.
pub trait SyntaxProvider {
    fn parse(&self, code: &str) -> Result<SyntaxTree, CegError>;
}

/// Block structure from indentation, for Python-like code.
///
/// Every logical line (a physical line plus continuation lines inside open
/// brackets) becomes a statement node under the nearest preceding statement
/// with smaller indentation, or under the `module` root. The statement kind is
/// its leading keyword (`def`, `if`, `for`, ...) or `statement`. A `def`
/// statement gets one `parameter` child per comma-separated entry of its
/// parameter list. Every token of the line becomes a leaf named after its
/// token class.
#[derive(Debug, Default, Clone, Copy)]
pub struct IndentTreeProvider;

const BLOCK_KEYWORDS: [&str; 15] = [
    "def", "class", "if", "elif", "else", "for", "while", "try", "except", "finally", "with",
    "return", "import", "from", "lambda",
];

fn logical_lines(tokens: &[Token]) -> Vec<&[Token]> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut depth = 0i64;
    for i in 0..tokens.len() {
        match tokens[i].text.as_str() {
            "(" | "[" | "{" if tokens[i].kind == TokenKind::Punct => depth += 1,
            ")" | "]" | "}" if tokens[i].kind == TokenKind::Punct => depth = (depth - 1).max(0),
            _ => {}
        }
        let next_on_new_line = tokens
            .get(i + 1)
            .is_none_or(|n| n.line > last_line(&tokens[i]));
        if depth == 0 && next_on_new_line {
            out.push(&tokens[start..=i]);
            start = i + 1;
        }
    }
    if start < tokens.len() {
        out.push(&tokens[start..]);
    }
    out
}

fn last_line(t: &Token) -> usize {
    t.line + t.text.matches('\n').count()
}

fn parameter_entries(line: &[Token]) -> usize {
    let Some(open) = line.iter().position(|t| t.text == "(") else {
        return 0;
    };
    let mut depth = 0i64;
    let mut entries = 0;
    let mut current = false;
    for t in &line[open..] {
        match t.text.as_str() {
            "(" | "[" | "{" => {
                depth += 1;
                if depth == 1 {
                    continue;
                }
            }
            ")" | "]" | "}" => {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            "," if depth == 1 => {
                entries += usize::from(current);
                current = false;
                continue;
            }
            _ => {}
        }
        current = true;
    }
    entries + usize::from(current)
}

impl SyntaxProvider for IndentTreeProvider {
    fn parse(&self, code: &str) -> Result<SyntaxTree, CegError> {
        let tokens = tokenize(code).map_err(|e| CegError::Syntax(e.to_string()))?;
        let mut tree = SyntaxTree::new("module");
        // (indent column, node) of the open blocks
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for line in logical_lines(&tokens) {
            let indent = line[0].col;
            while stack.last().is_some_and(|(c, _)| *c >= indent) {
                stack.pop();
            }
            let parent = stack.last().map_or(0, |(_, n)| *n);
            let head = &line[0];
            let kind = if head.kind == TokenKind::Identifier
                && BLOCK_KEYWORDS.contains(&head.text.as_str())
            {
                head.text.as_str()
            } else {
                "statement"
            };
            let node = tree.add(kind, parent);
            if kind == "def" {
                for _ in 0..parameter_entries(line) {
                    tree.add("parameter", node);
                }
            }
            for t in line {
                let leaf = match t.kind {
                    TokenKind::Identifier => "identifier",
                    TokenKind::Number => "number",
                    TokenKind::Str => "string",
                    TokenKind::Operator => "operator",
                    TokenKind::Punct => "punct",
                };
                tree.add(leaf, node);
            }
            stack.push((indent, node));
        }
        Ok(tree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nesting_follows_indentation() {
        let code =
            "def f(a, b=(1, 2), *c):\n    if a:\n        return b\n    x = [\n  1,\n  2]\ny = 3\n";
        let t = IndentTreeProvider.parse(code).unwrap();
        let stmts: Vec<(usize, &str)> = t
            .kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| ["def", "if", "return", "statement"].contains(&k.as_str()))
            .map(|(i, k)| (i, k.as_str()))
            .collect();
        let kinds: Vec<&str> = stmts.iter().map(|(_, k)| *k).collect();
        assert_eq!(kinds, vec!["def", "if", "return", "statement", "statement"]);
        let (def, iff, ret, x, y) = (stmts[0].0, stmts[1].0, stmts[2].0, stmts[3].0, stmts[4].0);
        assert_eq!(t.parents[def], Some(0));
        assert_eq!(t.parents[iff], Some(def));
        assert_eq!(t.parents[ret], Some(iff));
        assert_eq!(t.parents[x], Some(def));
        assert_eq!(t.parents[y], Some(0));
        assert_eq!(t.count_kind("parameter"), 3);
        assert_eq!(t.edges().len(), t.len() - 1);
    }

    #[test]
    fn parameter_lists() {
        let p = |s: &str| parameter_entries(&tokenize(s).unwrap());
        assert_eq!(p("def f():"), 0);
        assert_eq!(p("def f(self, budget, dim):"), 3);
        assert_eq!(p("def f(a, b=[1, 2],):"), 2);
    }
}
