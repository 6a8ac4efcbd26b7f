//! Prompt templates with a single input slot. The shipped texts live under
//! `templates/` as plain files so they can be diffed, overridden per
//! deployment, and pinned by golden tests.

use std::path::Path;

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateId {
    /// Table detection over a compressed encoding.
    Detect,
    /// Question-stage table selection over a compressed encoding.
    CosStage1,
    /// Answer extraction over a plain-encoded region.
    CosStage2,
}

impl TemplateId {
    /// The literal slot string the template must contain; rendering
    /// substitutes the payload for it.
    pub fn slot(&self) -> &'static str {
        match self {
            TemplateId::Detect => "[Encoded Spreadsheet]",
            TemplateId::CosStage1 => "[Encoded Spreadsheet with compression]",
            TemplateId::CosStage2 => "[Encoded Spreadsheet without compression]",
        }
    }

    /// File name used when loading overrides from a template directory.
    pub fn file_name(&self) -> &'static str {
        match self {
            TemplateId::Detect => "detect.txt",
            TemplateId::CosStage1 => "cos_stage1.txt",
            TemplateId::CosStage2 => "cos_stage2.txt",
        }
    }

    fn default_text(&self) -> &'static str {
        match self {
            TemplateId::Detect => include_str!("../../templates/detect.txt"),
            TemplateId::CosStage1 => include_str!("../../templates/cos_stage1.txt"),
            TemplateId::CosStage2 => include_str!("../../templates/cos_stage2.txt"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub text: String,
}

impl PromptTemplate {
    pub fn default_for(id: TemplateId) -> Self {
        PromptTemplate { id, text: id.default_text().to_string() }
    }

    /// Loads an override file; the text must still contain the slot.
    pub fn from_file(id: TemplateId, path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Template {
            what: format!("reading {}: {e}", path.display()),
        })?;
        let template = PromptTemplate { id, text };
        template.check_slot()?;
        Ok(template)
    }

    fn check_slot(&self) -> Result<(), PipelineError> {
        if self.text.contains(self.id.slot()) {
            Ok(())
        } else {
            Err(PipelineError::Template {
                what: format!("template {} lacks the slot {}", self.id.file_name(), self.id.slot()),
            })
        }
    }

    /// Substitutes the payload into the slot. Everything around the slot is
    /// emitted byte-for-byte.
    pub fn render(&self, payload: &str) -> Result<String, PipelineError> {
        self.check_slot()?;
        Ok(self.text.replacen(self.id.slot(), payload, 1))
    }
}

/// The three templates a pipeline run needs.
#[derive(Debug, Clone)]
pub struct Templates {
    pub detect: PromptTemplate,
    pub stage1: PromptTemplate,
    pub stage2: PromptTemplate,
}

impl Templates {
    pub fn defaults() -> Self {
        Templates {
            detect: PromptTemplate::default_for(TemplateId::Detect),
            stage1: PromptTemplate::default_for(TemplateId::CosStage1),
            stage2: PromptTemplate::default_for(TemplateId::CosStage2),
        }
    }

    /// Loads from a directory, falling back to the built-in text for any
    /// file that is absent.
    pub fn from_dir(dir: &Path) -> Result<Self, PipelineError> {
        let load = |id: TemplateId| -> Result<PromptTemplate, PipelineError> {
            let path = dir.join(id.file_name());
            if path.is_file() {
                PromptTemplate::from_file(id, &path)
            } else {
                Ok(PromptTemplate::default_for(id))
            }
        };
        Ok(Templates {
            detect: load(TemplateId::Detect)?,
            stage1: load(TemplateId::CosStage1)?,
            stage2: load(TemplateId::CosStage2)?,
        })
    }
}
