/// Lowercases, splits on whitespace and peels punctuation off both ends of
/// every chunk, one token per punctuation character. Punctuation inside a
/// word (apostrophes, hyphens) stays attached.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let chunk = chunk.to_lowercase();
        let chars: Vec<char> = chunk.chars().collect();
        let is_punct = |c: &char| !c.is_alphanumeric();
        let lead = chars.iter().take_while(|c| is_punct(c)).count();
        if lead == chars.len() {
            tokens.extend(chars.iter().map(char::to_string));
            continue;
        }
        let trail = chars.iter().rev().take_while(|c| is_punct(c)).count();
        tokens.extend(chars[..lead].iter().map(char::to_string));
        tokens.push(chars[lead..chars.len() - trail].iter().collect());
        tokens.extend(chars[chars.len() - trail..].iter().map(char::to_string));
    }
    tokens
}
