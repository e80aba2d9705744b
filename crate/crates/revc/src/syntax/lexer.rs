use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Ident(String),
    // keywords
    Def,
    Tt,
    Ff,
    SkipKw,
    If,
    Then,
    Else,
    Match,
    With,
    SplitKw,
    ErrKw,
    Let,
    Letrec,
    In,
    YKw,
    Nil,
    Inl,
    Inr,
    Pi1,
    Pi2,
    NotKw,
    AndKw,
    XorKw,
    BitKw,
    // punctuation
    Backslash,
    Dot,
    Colon,
    ColonColon,
    Arrow,
    Eq,
    Bar,
    Star,
    Plus,
    Comma,
    LParen,
    RParen,
    LAngle,
    RAngle,
    LBracket,
    RBracket,
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

pub fn lex(src: &str) -> Result<Vec<(Token, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let mut line = 1usize;
    let mut col = 1usize;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '-' => {
                bump!();
                match chars.peek() {
                    Some('-') => {
                        while let Some(&c2) = chars.peek() {
                            if c2 == '\n' {
                                break;
                            }
                            bump!();
                        }
                    }
                    Some('>') => {
                        bump!();
                        out.push((Token::Arrow, pos));
                    }
                    _ => {
                        return Err(ParseError::at(pos, "stray '-', expected '--' or '->'"));
                    }
                }
            }
            ':' => {
                bump!();
                if chars.peek() == Some(&':') {
                    bump!();
                    out.push((Token::ColonColon, pos));
                } else {
                    out.push((Token::Colon, pos));
                }
            }
            '\\' => {
                bump!();
                out.push((Token::Backslash, pos));
            }
            '.' => {
                bump!();
                out.push((Token::Dot, pos));
            }
            '=' => {
                bump!();
                out.push((Token::Eq, pos));
            }
            '|' => {
                bump!();
                out.push((Token::Bar, pos));
            }
            '*' => {
                bump!();
                out.push((Token::Star, pos));
            }
            '+' => {
                bump!();
                out.push((Token::Plus, pos));
            }
            ',' => {
                bump!();
                out.push((Token::Comma, pos));
            }
            '(' => {
                bump!();
                out.push((Token::LParen, pos));
            }
            ')' => {
                bump!();
                out.push((Token::RParen, pos));
            }
            '<' => {
                bump!();
                out.push((Token::LAngle, pos));
            }
            '>' => {
                bump!();
                out.push((Token::RAngle, pos));
            }
            '[' => {
                bump!();
                out.push((Token::LBracket, pos));
            }
            ']' => {
                bump!();
                out.push((Token::RBracket, pos));
            }
            '1' => {
                bump!();
                out.push((Token::One, pos));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c2) = chars.peek() {
                    if c2.is_ascii_alphanumeric() || c2 == '_' || c2 == '\'' {
                        s.push(c2);
                        bump!();
                    } else {
                        break;
                    }
                }
                let tok = match s.as_str() {
                    "def" => Token::Def,
                    "tt" => Token::Tt,
                    "ff" => Token::Ff,
                    "skip" => Token::SkipKw,
                    "if" => Token::If,
                    "then" => Token::Then,
                    "else" => Token::Else,
                    "match" => Token::Match,
                    "with" => Token::With,
                    "split" => Token::SplitKw,
                    "err" => Token::ErrKw,
                    "let" => Token::Let,
                    "letrec" => Token::Letrec,
                    "in" => Token::In,
                    "Y" => Token::YKw,
                    "nil" => Token::Nil,
                    "inl" => Token::Inl,
                    "inr" => Token::Inr,
                    "pi1" => Token::Pi1,
                    "pi2" => Token::Pi2,
                    "not" => Token::NotKw,
                    "and" => Token::AndKw,
                    "xor" => Token::XorKw,
                    "bit" => Token::BitKw,
                    _ => Token::Ident(s),
                };
                out.push((tok, pos));
            }
            other => {
                return Err(ParseError::at(pos, &format!("unexpected character '{other}'")));
            }
        }
    }
    Ok(out)
}
