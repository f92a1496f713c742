"""Prompt-template registry.

Template bodies are fixed strings with {name} placeholders. `render_prompt`
performs pure single-pass substitution: bound values are inserted verbatim
(no escaping, no re-scanning), so JSON metadata blocks and SVG code pass
through untouched.
"""

import re
from dataclasses import dataclass
from typing import Dict, FrozenSet, Mapping, Tuple

_PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


class UnboundPlaceholder(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"placeholder {{{self.name}}} is not bound"


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    body: str

    @property
    def placeholders(self) -> FrozenSet[str]:
        return frozenset(_PLACEHOLDER.findall(self.body))


_IMG2SVG = """\
Convert this image to SVG code following these rules:

CRITICAL REQUIREMENTS:

- Output only pure SVG code, no markdown blocks or explanations.
- Start with <svg viewBox="..." xmlns="http://www.w3.org/2000/svg"> and end with </svg>.
- Use only native SVG elements (no external images or links).
- Include viewBox to ensure all elements are visible and auto-scale properly.
- Calculate appropriate viewBox dimensions to contain all content with some padding.

Generate the SVG now."""

_IMG2TEXT2SVG_CAPTION = """\
Please provide a detailed and accurate description of this image. Focus on:

1. Main objects, shapes, and elements
2. Colors, textures, and visual properties
3. Spatial relationships and positioning
4. Style and artistic characteristics
5. Any text, symbols, or specific details

Be precise and comprehensive. This description will be used to recreate the image as an SVG. Include geometric details, proportions, and layout information that would be necessary for accurate reproduction."""

_IMG2TEXT2SVG_GENERATE = """\
Based on the following description, generate clean and accurate SVG code:

{description}

CRITICAL REQUIREMENTS:

1. Output ONLY complete SVG code, no explanations or other text.
2. Use appropriate dimensions (e.g., viewBox="0 0 400 400" or similar).
3. Include all elements described with accurate colors, shapes, and positioning.
4. Use clean, well-structured SVG syntax.
5. Ensure the SVG is self-contained and complete.
6. Start with <svg viewBox="..." xmlns="http://www.w3.org/2000/svg"> and end with </svg>.
7. Use precise geometric shapes and paths where appropriate.
8. Match colors and proportions as closely as possible to the description.

Generate the SVG now."""

_IMG2SVG_THINKING = """\
Let's analyze this image and create an SVG representation through a structured thinking process.

Step-by-step analysis:
1. Visual Decomposition
- What are the main visual elements?
- What geometric shapes can be identified?
- What are the key colors and their relationships?

2. Structural Analysis
- How are elements arranged and layered?
- What are the proportions and spatial relationships?
- Are there any repeating patterns or symmetry?

3. SVG Implementation Strategy
- Which SVG elements best represent each component?
- What's the optimal drawing order?
- How to handle complex shapes and gradients?

4. Technical Considerations
- What viewport dimensions are appropriate?
- How to ensure scalability and responsiveness?
- What optimizations can be applied?
After your analysis, provide:
1. Your complete reasoning process
2. The final SVG code implementation
Requirements for SVG output:
- Must be complete and self-contained.
- Include all necessary attributes and elements.
- Start with <svg tag and end with </svg>.
- Use appropriate viewBox and dimensions.
Please proceed with the analysis and generation."""

_VISUAL_TOOLS_SYSTEM = """\
You are a helpful assistant that converts images into clean, complete SVG vector graphics.

Your primary task is img2svg conversion for Visual Question Answering. You have access to two types of metadata to assist with precision:

METADATA AVAILABLE:
- OCR metadata: Text regions with precise 4-point quadrilaterals for accurate text placement.
- Object detection metadata: Object boundaries with labels, confidence scores, and svg_path outlines.

SPECIAL CASE HANDLING (Hint Strategy):
Sometimes, an image may depict a person, character, or artwork where fine details like facial features or texture could be lost during vectorization. Examples include:
- A recognizable public figure such as a scientist or political leader
- A well-known fictional character from popular culture
- A famous painting or portrait by a specific artist

If the subject in the image is of this nature and important identity cues might be lost:
- Preserve recognizability by including visual hints such as characteristic clothing, accessories, environment, or symbolic elements.
- When confident, you may add a <text> element near the subject that provides their commonly known name, the name of the associated work or series, or the title/creator of an artwork.

If the subject does not fit these examples or is not clearly recognizable:
- Generate a clean SVG with no extra text labels.
- Focus on accurate shapes, proportions, and composition.

METADATA INTEGRATION:
1) Text rendering: Use OCR quadrilaterals as authoritative coordinates for text placement. Render literal text strings with appropriate transforms for rotation/skew.
2) Object boundaries: Use detection svg_paths as authoritative contours. Infer fill/stroke colors and add internal details within these boundaries.
3) Background reconstruction: Fill in unlabeled regions using native SVG primitives.

PROCESSING PRIORITY:
1. Use provided metadata for precise positioning (OCR quads, detection paths).
2. Apply hint strategy for recognizable subjects.
3. Reconstruct missing background/unlabeled areas.
4. Ensure proper layering and visual completeness.

OUTPUT REQUIREMENTS:
- Output only pure SVG code, no markdown blocks or explanations.
- Start with <svg viewBox="..." xmlns="http://www.w3.org/2000/svg"> and end with </svg>.
- Use only native SVG elements (no external images or links).
- Include viewBox to ensure all elements are visible and auto-scale properly.
- Do not include explanations or commentary.

This SVG will be used in a Visual Question Answering task, so ensure the output retains as much semantic identity as possible when visual details are reduced."""

_VISUAL_TOOLS_USER = """\
Image dimensions: {W}x{H}

METADATA:
{metadata_json}

Generate the complete SVG with precise metadata integration and appropriate hint strategy for recognizable subjects."""

_REVISION_DIFF = """\
Compare the original image (first) with the SVG-rendered image (second) and identify specific differences for SVG code revision.

Focus on identifying:

1. LOCATION-SPECIFIC DIFFERENCES:
- Which areas or regions differ (top-left, center, bottom-right, etc.).
- Missing or extra elements in specific positions.

2. VISUAL ATTRIBUTE DIFFERENCES:
- Color mismatches (specify which elements and what colors).
- Shape distortions (which shapes are wrong and how).
- Size or proportion issues (which elements are too big or too small).
- Position or alignment problems.

3. SPECIFIC SVG REVISION SUGGESTIONS:
- Which SVG elements need modification (circle, path, rect, etc.).
- What attributes to change (fill, stroke, cx, cy, width, height, d, etc.).
- Specific color values or coordinate adjustments needed.

Format your response as actionable SVG revision instructions."""

_REVISION_FIX = """\
You are an SVG code specialist. Based on the visual analysis and comparison between the original image and the current SVG rendering, make specific code modifications to fix identified issues.

VISUAL ANALYSIS FINDINGS:
{optimization_goals}

CURRENT SVG CODE:
{current_svg_code}

INSTRUCTIONS:
1. Analyze the current SVG code structure and elements.
2. Based on the visual analysis findings, identify which specific SVG elements need modification.
3. Make precise changes to fix the identified issues:
   - Adjust colors (fill, stroke attributes).
   - Fix shapes and paths (modify d attributes, coordinates).
   - Correct sizes and positions (width, height, cx, cy, x, y).
   - Add missing elements or remove incorrect ones.
4. Output only the complete revised SVG code.
5. Ensure all modifications directly address the issues mentioned in the analysis.
6. Start with <svg and end with </svg>.

Revised SVG code:"""

# The policy model sees only the rendered image and the question text; any
# answer-format instruction travels inside the {question} binding so stored
# prompts replay exactly.
_CODEVQA_POLICY = "{question}"

_LLM_JUDGE = """\
You are grading an answer to a visual question.

Question: {question}
Gold answer: {gold}
Candidate answer: {answer}

Score the candidate's correctness against the gold answer on a scale from 0.0 to 1.0, where 1.0 means fully correct and 0.0 means entirely wrong. Partial credit is allowed for answers that are partially correct. Reply with the numeric score only."""


_REGISTRY: Dict[str, PromptTemplate] = {
    t.template_id: t
    for t in (
        PromptTemplate("img2svg", _IMG2SVG),
        PromptTemplate("img2text2svg_caption", _IMG2TEXT2SVG_CAPTION),
        PromptTemplate("img2text2svg_generate", _IMG2TEXT2SVG_GENERATE),
        PromptTemplate("img2svg_thinking", _IMG2SVG_THINKING),
        PromptTemplate("visual_tools_system", _VISUAL_TOOLS_SYSTEM),
        PromptTemplate("visual_tools_user", _VISUAL_TOOLS_USER),
        PromptTemplate("revision_diff", _REVISION_DIFF),
        PromptTemplate("revision_fix", _REVISION_FIX),
        PromptTemplate("codevqa_policy", _CODEVQA_POLICY),
        PromptTemplate("llm_judge", _LLM_JUDGE),
    )
}


def template_ids() -> Tuple[str, ...]:
    return tuple(_REGISTRY)


def get_template(template_id: str) -> PromptTemplate:
    try:
        return _REGISTRY[template_id]
    except KeyError:
        raise ValueError(
            f"unknown prompt template {template_id!r}; "
            f"known: {sorted(_REGISTRY)}"
        ) from None


def render_prompt(template: PromptTemplate, bindings: Mapping[str, str]) -> str:
    """Fill every placeholder from `bindings`; extra bindings are ignored."""

    def substitute(match: "re.Match[str]") -> str:
        name = match.group(1)
        if name not in bindings:
            raise UnboundPlaceholder(name)
        return str(bindings[name])

    return _PLACEHOLDER.sub(substitute, template.body)
