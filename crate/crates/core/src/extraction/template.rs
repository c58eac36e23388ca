use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::record::LABELS;
use crate::corpus::Article;
use crate::error::{Error, Result};

const CANONICAL: &str = include_str!("../../data/prompt_template.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub context_preamble: String,
    /// `(label, question)` pairs, A through AF.
    pub questions: Vec<(String, String)>,
    pub formatting_instructions: String,
    pub summary_request: String,
}

impl PromptTemplate {
    /// The finalized 32-question featurization prompt bundled with the crate.
    pub fn canonical() -> Self {
        let t: PromptTemplate =
            serde_json::from_str(CANONICAL).expect("bundled template is valid json");
        t.validate().expect("bundled template is well formed");
        t
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let t: PromptTemplate = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("template {}: {e}", path.display())))?;
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.questions.len() != LABELS.len() {
            return Err(Error::Config(format!(
                "template has {} questions, expected {}",
                self.questions.len(),
                LABELS.len()
            )));
        }
        for ((label, _), expected) in self.questions.iter().zip(LABELS) {
            if label != expected {
                return Err(Error::Config(format!(
                    "question labeled {label:?} where {expected:?} was expected"
                )));
            }
        }
        Ok(())
    }

    /// Preamble, questions, formatting instructions and summary request,
    /// with the article text appended verbatim at the end.
    pub fn render(&self, article: &Article) -> String {
        let mut out = String::with_capacity(4096 + article.text.len());
        out.push_str(&self.context_preamble);
        out.push_str("\n\n");
        for (label, question) in &self.questions {
            out.push_str(label);
            out.push_str(": ");
            out.push_str(question);
            out.push('\n');
        }
        out.push('\n');
        out.push_str(&self.formatting_instructions);
        out.push_str("\n\n");
        out.push_str(&self.summary_request);
        out.push_str("\n\n");
        out.push_str(&article.text);
        out
    }
}

pub fn build_prompt(article: &Article, template: &PromptTemplate) -> String {
    template.render(article)
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;

    use super::*;

    fn article(text: &str) -> Article {
        Article {
            article_id: "a1".into(),
            source: "El Tiempo".into(),
            publication_date: NaiveDate::from_ymd_opt(2011, 6, 21).unwrap(),
            text: text.into(),
            scan_ref: None,
        }
    }

    #[test]
    fn contains_question_a_and_article_last() {
        let t = PromptTemplate::canonical();
        let p = build_prompt(&article("Texto del artículo."), &t);
        assert!(p.contains("one specific battle, attack, or incident of violence"));
        assert!(p.contains("AF: Does the article reference the name of a criminal group"));
        assert!(p.ends_with("Texto del artículo."));
        let a = p.find("\nA: ").unwrap();
        let af = p.find("\nAF: ").unwrap();
        let fmt = p.find("semi-colon separated format").unwrap();
        let summary = p.find("1-3 sentence summary").unwrap();
        assert!(a < af && af < fmt && fmt < summary);
    }

    #[test]
    fn deterministic_and_pass_through() {
        let t = PromptTemplate::canonical();
        let art = article("uno; dos; tres");
        assert_eq!(build_prompt(&art, &t), build_prompt(&art, &t));
        assert!(build_prompt(&art, &t).ends_with("uno; dos; tres"));
    }

    #[test]
    fn rejects_wrong_labels() {
        let mut t = PromptTemplate::canonical();
        t.questions.swap(0, 1);
        assert!(t.validate().is_err());
        t.questions.truncate(31);
        assert!(t.validate().is_err());
    }
}
