// Built-in template texts. The one-shot bodies must stay byte-identical to
// the transcriptions under tests/goldens/; edit both together.

#include "tale/prompts.hpp"

namespace tale::prompts {

namespace {

// --- Candidate answer generation (few-shot chain-of-thought) ---------------

const char* kCandidateHeader =
    R"__(Instructions:
Answer the following questions. For each question, provide a complete answer, and conclude with the phrase: "So the answer is: [Answer].")__";

const char* kCandidateExamples =
    R"__(Q: What is the elevation range for the area that the eastern sector of the Colorado orogeny extends into?
A: Let's think step by step. The eastern sector of Colorado orogeny extends into the High Plains. High Plains rise in elevation from around 1,800 to 7,000 ft.
So the answer is: 1,800 to 7,000 ft.

Q: Musician and satirist Allie Goertz wrote a song about the "The Simpsons" character Milhouse, who Matt Groening named after who?
A: Let's think step by step. Milhouse was named after U.S. president Richard Nixon.
So the answer is: Richard Nixon.

Q: Which documentary is about Finnish rock groups, *Adam Clayton Powell* or *The Saimaa Gesture*?
A: Let's think step by step. *Adam Clayton Powell* is a documentary about an African-American politician, not Finnish rock groups. So the documentary about Finnish rock groups must instead be *The Saimaa Gesture*.
So the answer is: The Saimaa Gesture.

Q: What profession do Nicholas Ray and Elia Kazan have in common?
A: Let's think step by step. The professions of Nicholas Ray are director, screenwriter, and actor. The professions of Elia Kazan are director, producer, screenwriter, and actor. So the professions Nicholas Ray and Elia Kazan have in common are director, screenwriter, and actor.
So the answer is: director, screenwriter, actor.

Q: Which magazine was started first, *Arthur's Magazine* or *First for Women*?
A: Let's think step by step. *Arthur's Magazine* was started in 1844. *First for Women* was started in 1989. 1844 (Arthur's Magazine) < 1989 (First for Women), so *Arthur's Magazine* was started first.
So the answer is: Arthur's Magazine.

Q: Were Pavel Urysohn and Leonid Levin known for the same type of work?
A: Let's think step by step. Pavel Urysohn is a mathematician. Leonid Levin is a mathematician and computer scientist. So Pavel Urysohn and Leonid Levin have the same type of work.
So the answer is: Yes.)__";

const char* kCandidateFooter =
    R"__(Q: {question}
A:)__";

// --- Query generation -------------------------------------------------------

const char* kQueryGenerationHeader =
    R"__(Your goal is to generate a targeted web search query.

Before you produce the final query, think carefully about:
1. The question's key concepts or keywords (e.g., important names, dates).
2. Whether the question might be ambiguous or reference multiple possible answers (e.g., a book with the same title by different authors, or a modern text about a historical figure).

Question: {question}

Return your response as a JSON object with ALL three exact keys:
- "query": The search query string.
- "aspect": The specific aspect of the question to focus on.
- "rationale": A brief explanation of why this query is relevant, including your chain-of-thought reasoning.)__";

const char* kQueryGenerationExample1 =
    R"__(Example Output:
{
  "query": "Apollo 11 moon landing year + NASA + 1969",
  "aspect": "historical event",
  "rationale": "The question asks about Apollo 11's landing year,
                so I'm including NASA, year, and 1969 to get relevant info."
})__";

const char* kQueryGenerationExample2 =
    R"__(Example Output:
{
  "query": "Mount Everest official height meters latest survey",
  "aspect": "measured elevation",
  "rationale": "The question concerns Everest's height,
                so I target the officially surveyed elevation figure."
})__";

const char* kQueryGenerationExample3 =
    R"__(Example Output:
{
  "query": "first woman to win Nobel Prize in Physics year",
  "aspect": "award history",
  "rationale": "The question asks about a prize recipient,
                so I search for the laureate together with the award year."
})__";

// --- Evidence summarization --------------------------------------------------

const char* kSummarizationHeader =
    R"__(You are a summarization assistant. Carefully review the raw search results and then provide a concise summary of the key information relevant to the question.

Raw Search Results: {raw_results}

Return your summary as plain text.
- Keep it neutral and focused on the question.
- If results conflict, mention that briefly.
- Do not add extra commentary.)__";

const char* kSummarizationExample1 =
    R"__(Example Output (Plain Text):
"Result 1 says X about the event date,
 Result 2 says Y but doesn't mention the exact date.
 Overall, it references 1969.")__";

const char* kSummarizationExample2 =
    R"__(Example Output (Plain Text):
"Both results agree the bridge opened in 1937;
 one adds that construction began in 1933.")__";

const char* kSummarizationExample3 =
    R"__(Example Output (Plain Text):
"Result 1 lists four band members, Result 2 lists five
 for an earlier lineup. The sources conflict on the count.")__";

// --- Iterative reflection ----------------------------------------------------

const char* kReflectionHeader =
    R"__(You are a research assistant tasked with analyzing the gathered evidence in relation to the question and candidate answer. Think step by step—explain your reasoning and note any gaps or additional details that might be needed. Do not provide a final decision; simply offer your chain-of-thought reflection.

Question: {question}
Candidate Answer: {candidate_answer}
Evidence Summary: {evidence_summary}

Return your response as a JSON object with a single key:
- "reflection": Your chain-of-thought reflection summarizing your analysis.)__";

const char* kReflectionExample1 =
    R"__(Example Output:
{
  "reflection": "I observed that the evidence overwhelmingly confirms
                 that Apollo 11 landed on the moon in 1969, though there
                 is slight variation in the reported landing times across
                 sources. Additional authoritative sources might help
                 resolve these minor discrepancies."
})__";

const char* kReflectionExample2 =
    R"__(Example Output:
{
  "reflection": "The evidence names a different person than the candidate
                 answer does, which suggests a contradiction. A search
                 scoped to the specific year could confirm which
                 attribution is right."
})__";

const char* kReflectionExample3 =
    R"__(Example Output:
{
  "reflection": "The evidence is topical but never states the quantity the
                 question asks about, so it is inconclusive. Figures from
                 an official source are still missing."
})__";

// --- Query refinement --------------------------------------------------------

const char* kRefinementHeader =
    R"__(You are a research assistant. Before refining the search query, analyze the existing evidence and reflect on what keywords might be missing or need emphasis. Think step by step and then produce your final refined query.

Question: {question}
Current Search Query: {current_query}
Aggregated Evidence Summary: {evidence_summary}
Iterative Reflection: {iterative_reflection}

If the evidence still does not resolve the question or if there might be an alternative perspective, incorporate additional, more specific keywords to explore those possibilities. For instance:
- Add relevant dates or historical context.
- Use synonyms or alternate phrasings for ambiguous or repeated terms.
- Specify a domain or subject area (e.g., "film," "novel," "historical figure") if it reduces confusion.
- Highlight the location, time period, or any unique aspect not yet included in the current query.

Return your response as a JSON object with ALL three exact keys:
- "query": The refined search query.
- "aspect": The specific aspect being targeted with the refined query.
- "rationale": A brief explanation of your reasoning (chain-of-thought) and why this refinement is needed.)__";

const char* kRefinementExample1 =
    R"__(Example Output:
{
  "query": "Apollo 11 detailed timeline moon landing 1969",
  "aspect": "chronological sequence",
  "rationale": "The initial query did not specify the temporal progression
                of events. I refined it to target a detailed timeline of
                the Apollo 11 mission in 1969 to capture the sequence of
                key events."
})__";

const char* kRefinementExample2 =
    R"__(Example Output:
{
  "query": "Golden Gate Bridge opening ceremony May 1937 newspaper",
  "aspect": "opening date",
  "rationale": "Earlier evidence covered construction only, so I narrow
                the query to the opening ceremony and add the year for
                precision."
})__";

const char* kRefinementExample3 =
    R"__(Example Output:
{
  "query": "Lush band lineup 1990s official member count",
  "aspect": "band membership",
  "rationale": "The sources conflicted on the member count, so I target
                the band's documented lineup in the relevant period."
})__";

// --- Judgment ----------------------------------------------------------------

const char* kJudgmentHeader =
    R"__(You are a critical evaluator. You have:
1. The question and the candidate answer,
2. The evidence summary from multiple iterative searches (these may sometimes contain overlapping or conflicting info),
3. The chain-of-thought reflection from prior steps,
4. Your own broad knowledge (only if the above are inconclusive).

Follow these guidelines:
- If the summarized evidence and reflections strongly conflict with the candidate answer, conclude "False."
- If the evidence strongly confirms the candidate answer, conclude "True."
- If the evidence is inconclusive or incomplete, but your own knowledge supports the answer, you may conclude "True" if confident. Otherwise, conclude "False" or state insufficient information.
- When the retrieved evidence is irrelevant, prioritize the chain-of-thought reflections and your own knowledge.

Produce your conclusion in JSON with:
- "decision": "True" or "False"
- "explanation": A concise reason (including your step-by-step reasoning) describing how you arrived at the verdict.

Input:
Question: {question}
Candidate Answer: {candidate_answer}
Evidence Summary: {evidence_summary}
Reflection: {reflection})__";

const char* kJudgmentExample1 =
    R"__(Example Output:
{
  "decision": "True",
  "explanation": "The evidence overwhelmingly confirms that Apollo 11
                  landed on the moon in 1969. While minor discrepancies
                  exist in the reported times, they do not undermine the
                  main conclusion. Additional verification is unnecessary."
})__";

const char* kJudgmentExample2 =
    R"__(Example Output:
{
  "decision": "False",
  "explanation": "The evidence consistently attributes the record to a
                  different person than the candidate answer names, so the
                  answer contradicts the gathered evidence."
})__";

const char* kJudgmentExample3 =
    R"__(Example Output:
{
  "decision": "True",
  "explanation": "Both the evidence summary and the reflection support the
                  candidate answer, and no source contradicts it."
})__";

// --- Judgment without tool access (not transcribed; no golden) ---------------

const char* kNoToolHeader =
    R"__(You are a critical evaluator. You have the question and the candidate answer, and you must rely entirely on your own knowledge: no external evidence is available. Think step by step about whether the candidate answer is factually correct.

Follow these guidelines:
- If your knowledge strongly conflicts with the candidate answer, conclude "False."
- If your knowledge strongly confirms the candidate answer, conclude "True."
- If you are uncertain, conclude "False" or state insufficient information.

Produce your conclusion in JSON with:
- "decision": "True" or "False"
- "explanation": A concise reason (including your step-by-step reasoning) describing how you arrived at the verdict.

Input:
Question: {question}
Candidate Answer: {candidate_answer})__";

const char* kNoToolExample1 =
    R"__(Example Output:
{
  "decision": "True",
  "explanation": "The capital of France is Paris; the candidate answer
                  states exactly that, so it is correct."
})__";

const char* kNoToolExample2 =
    R"__(Example Output:
{
  "decision": "False",
  "explanation": "The candidate answer names the wrong country for the
                  landmark in question, which contradicts well-established
                  geography."
})__";

const char* kNoToolExample3 =
    R"__(Example Output:
{
  "decision": "True",
  "explanation": "Basic arithmetic confirms the candidate answer; no
                  further verification is needed."
})__";

}  // namespace

std::map<TemplateId, PromptTemplate> builtin_templates() {
    std::map<TemplateId, PromptTemplate> templates;

    templates[TemplateId::candidate_cot] = PromptTemplate{
        TemplateId::candidate_cot,
        kCandidateHeader,
        {kCandidateExamples},
        kCandidateFooter,
        {"question"},
    };
    templates[TemplateId::query_generation] = PromptTemplate{
        TemplateId::query_generation,
        kQueryGenerationHeader,
        {kQueryGenerationExample1, kQueryGenerationExample2, kQueryGenerationExample3},
        "",
        {"question"},
    };
    templates[TemplateId::evidence_summarization] = PromptTemplate{
        TemplateId::evidence_summarization,
        kSummarizationHeader,
        {kSummarizationExample1, kSummarizationExample2, kSummarizationExample3},
        "",
        {"raw_results"},
    };
    templates[TemplateId::reflection] = PromptTemplate{
        TemplateId::reflection,
        kReflectionHeader,
        {kReflectionExample1, kReflectionExample2, kReflectionExample3},
        "",
        {"question", "candidate_answer", "evidence_summary"},
    };
    templates[TemplateId::query_refinement] = PromptTemplate{
        TemplateId::query_refinement,
        kRefinementHeader,
        {kRefinementExample1, kRefinementExample2, kRefinementExample3},
        "",
        {"question", "current_query", "evidence_summary", "iterative_reflection"},
    };
    templates[TemplateId::judgment] = PromptTemplate{
        TemplateId::judgment,
        kJudgmentHeader,
        {kJudgmentExample1, kJudgmentExample2, kJudgmentExample3},
        "",
        {"question", "candidate_answer", "evidence_summary", "reflection"},
    };
    templates[TemplateId::no_tool_judgment] = PromptTemplate{
        TemplateId::no_tool_judgment,
        kNoToolHeader,
        {kNoToolExample1, kNoToolExample2, kNoToolExample3},
        "",
        {"question", "candidate_answer"},
    };
    return templates;
}

}  // namespace tale::prompts
