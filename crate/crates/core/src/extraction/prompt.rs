use crate::curation::SeedDocument;
use crate::template::render;

pub(crate) const EXTRACTION_TEMPLATE: &str = r#"You are a code-related text analysis expert. Given a piece of code-related text, you will extract the following attributes:

1. **Application Scenario**: Extract the most specific, concrete real-world application scenario where this code/algorithm would be practically used.

**Guidelines for Application Scenario**:
- Focus on WHERE and HOW this code would be used in real software systems
- Avoid generic categories like "data processing", "mathematical computation", "algorithm implementation"
- Think about specific industries, use cases, or problem domains
- Consider what kind of software system or application would need this functionality
- If multiple scenarios are possible, choose the most common or practical one

**Examples of good vs bad scenario extraction**:
Bad: "Mathematical Computation Tool", "Data Processing System", "Algorithm Implementation"
Good: "Computer Graphics Engine Curve Rendering", "Financial Trading Platform Risk Calculation Module", "Scientific Computing Software Symbolic Math Engine"

2. **Domain Knowledge**:
Identify 1 to 3 key domain concepts and its usage of this knowledge (in less than 15 words) that are most relevant and thoroughly discussed in the text.
The concepts and usage should be detailed and specific, but expressed in general terms without reference to problem-specific details. The concepts may come from different domains.
Format: Domain Knowledge: Detail Usage
(e.g., "XGBoost Regression: Predict target variable using gradient boosting decision trees with hyperparameter tuning.", "ARIMA Modeling: Fit and forecast time series data using autoregressive integrated moving average models.")

3. **Domain Skill**: For each domain knowledge, extract up to one associated skill/method and the usage (if exists) that represents a problem-solving technique related to that knowledge.
The skill/method should be directly related to the concept and *applied in the provided text*.
- **If no clear skill is present, write "NA".**
- Avoid forcing the extraction of a skill if the text does not *deeply* involve one.
- If the technique is too subtle, write "NA".
- Provide a concise, detailed explanation of the skill in general terms.
Format: Domain Skill: Detail methods to achieve it.
(e.g., "Elbow Method: Determine the optimal number of clusters by analyzing variance explained versus number of clusters.", "AutoARIMA: Automatically select optimal ARIMA parameters using statistical criteria and grid search techniques.")

4. **Coding Skill**: Extract *one* core programming logic for each category: problem-solving and design thinking, tools and frameworks, as well as algorithms and data structures

(e.g., "Algorithms and Data Structures
1. Data Querying and Aggregation Analysis: Perform statistical, filtering, and aggregation operations on air quality data through SQL queries.")

- If the text doesn’t involve coding or the information is not present, output "NA".

##**Note:**
Do not output any explanation, output only as the format below.

## Output Format (output in English)
{output_format}

##**Code Text**
{code_text}

## Output"#;

/// The reply grammar requested from the model and accepted by
/// [`super::parse_extraction_output`].
pub const EXTRACTION_OUTPUT_FORMAT: &str = "Application Scenario:
<the specific real-world application scenario>

Domain Knowledge:
1. <Knowledge Name>: <Detail Usage>
2. <Knowledge Name>: <Detail Usage>

Domain Skill:
1. <Knowledge Name>:
1.1. <Skill Name>: <Detail methods to achieve it>
2. <Knowledge Name>:
2.1. NA

Coding Skill:
Problem-solving and Design Thinking:
1. <Skill Name>: <Detail Usage>
Tools and Frameworks:
1. <Skill Name>: <Detail Usage>
Algorithms and Data Structures:
1. <Skill Name>: <Detail Usage>";

pub fn render_extraction_prompt(doc: &SeedDocument) -> String {
    render(
        EXTRACTION_TEMPLATE,
        &[("output_format", EXTRACTION_OUTPUT_FORMAT), ("code_text", &doc.text)],
    )
}
