//! Chat-completion request/response values and the port the agents call.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl TokenUsage {
    pub const fn new(prompt_tokens: u64, completion_tokens: u64) -> Self {
        Self {
            prompt_tokens,
            completion_tokens,
        }
    }

    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

impl Add for TokenUsage {
    type Output = TokenUsage;

    fn add(self, rhs: Self) -> Self {
        Self {
            prompt_tokens: self.prompt_tokens + rhs.prompt_tokens,
            completion_tokens: self.completion_tokens + rhs.completion_tokens,
        }
    }
}

impl AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl core::iter::Sum for TokenUsage {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(TokenUsage::default(), Add::add)
    }
}

pub fn sum_usage(usages: &[TokenUsage]) -> TokenUsage {
    usages.iter().copied().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model: String,
    pub temperature: f64,
    pub messages: Vec<Message>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    /// Distinguishes repeated trials of an identical prompt.
    pub seed_tag: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvalidRequest {
    #[error("request has no messages")]
    NoMessages,
    #[error("temperature {0} outside [0, 1]")]
    Temperature(String),
}

impl CompletionRequest {
    /// A single user turn, which is how both agents talk to the model.
    pub fn single_turn(
        model: impl Into<String>,
        temperature: f64,
        prompt: impl Into<String>,
        seed_tag: impl Into<String>,
    ) -> Self {
        Self {
            model: model.into(),
            temperature,
            messages: vec![Message::user(prompt)],
            max_tokens: None,
            seed_tag: seed_tag.into(),
        }
    }

    pub fn validate(&self) -> Result<(), InvalidRequest> {
        if self.messages.is_empty() {
            return Err(InvalidRequest::NoMessages);
        }
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(InvalidRequest::Temperature(alloc::format!("{}", self.temperature)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub usage: TokenUsage,
    #[serde(default)]
    pub provider_meta: BTreeMap<String, String>,
}

impl Completion {
    pub fn new(text: impl Into<String>, usage: TokenUsage) -> Self {
        Self {
            text: text.into(),
            usage,
            provider_meta: BTreeMap::new(),
        }
    }
}

/// Anything that turns a request into a completion: the record/replay
/// gateway in production, scripted fakes in tests.
pub trait ChatModel {
    type Error;

    fn complete(&self, request: &CompletionRequest) -> Result<Completion, Self::Error>;
}

impl<T: ChatModel + ?Sized> ChatModel for &T {
    type Error = T::Error;

    fn complete(&self, request: &CompletionRequest) -> Result<Completion, Self::Error> {
        (**self).complete(request)
    }
}
