//! Prompt templates. Placeholders are `{name}` and are filled by [`fill`].

pub const ELICIT: &str = "You are an expert C programmer. You need to generate a C program
based on the following natural language description:

  {description}

List safety/correctness properties of the program that performs
this task in succinct natural language. The properties should be
expressible as assertions in the code.

Your answer should just be:
1. ...
2. ...
";

pub const SYNTHESIZE: &str = "You are an expert C programmer and verification-aware developer.

Task: Generate a complete, working C program that implements the
following specification:

SPEC:
{description}

Constraints (must follow all):
1) Avoid using any third-party/external libraries.
2) Keep the program verification-friendly:
   - No recursion.
   - No dynamic allocation (malloc/free).
   - No floating point.
   - No pointer arithmetic beyond array indexing.
   - Avoid undefined behavior (signed overflow, out-of-bounds,
     shifting by >= width, uninitialized reads).
   - Use fixed maximum sizes for arrays/buffers; validate lengths.
   - For strings, use strnlen() instead of strlen().
3) Deterministic control flow for bounded verification:
   - Every loop must have clear static bounds (constants or
     validated input capped at a constant).
   - If a bound is configurable, declare it as a macro at the top
     (e.g., #define MAX_N 100).
4) Decomposable structure:
   - Provide small functions for each subtask (parsing, validation,
     core logic, output formatting).
5) I/O:
   - Read from stdin and write to stdout.
   - On invalid input, print an error and exit with nonzero code.
6) Output:
   - Return ONLY the full program as a single C file, wrapped in
     triple-backtick ```c formatting.
   - Include a brief comment at the top stating assumptions and bounds.
";

pub const ANNOTATE: &str = "You are an expert C programmer.

You are given:
  Description: {description}
  A C program that implements the task: {program}
  Safety and correctness properties: {properties}

Annotate the C program with assertions that express these properties
as function contracts.

Rules:
- Treat each C function (including static functions and main) as a
  method.
- Add preconditions as assert(...) at the very start of each function.
- Add postconditions as assert(...) immediately before each return.
  For void functions, place postconditions before the closing brace.
- Use only standard C assertions: assert(condition);
- Include <assert.h>.
- Do not add, remove, or modify existing code except for inserting
  assertions.
- Helper functions (returning bool, called within assert, containing
  no assert themselves) are allowed.
- Assertions may reference function parameters, return values (via
  existing variables), and globals in scope.

Applicability:
- Add an assertion only if it meaningfully applies to the function
  and can be soundly checked at the function boundary.
- Do not add trivial assertions (assert(true), assert(1), x == x).
- Only add assertions that enforce one of the listed properties.

Output:
- Output only the annotated C program in triple-backtick C formatting.
- Do not include any explanation outside the code block.
";

pub const TRANSLATE_FACT: &str = "You are an expert C programmer converting assertions in a C program
into easily understandable natural-language facts.

Goal: make assertions easier to understand for non-experts.
Facts should represent the technical content of the assertion but
be written in simple, accessible language.
Do not give MORE information than the assertion. Do not interpret
it---just translate it into simple natural language.

Format: \"//FACT: At this point in the program, ...\"

Replace each assertion statement with a //FACT: comment.
Keep all other code exactly the same.
Do not add code fences.

C Program:
{program}
";

pub const BOUND_REDUCE: &str = "You are an expert C programmer preparing a program for bounded model
checking with a loop-unwind bound of k = {k}.

Tighten the loop-bound constants so that no loop can iterate more than
{k} times (for example, reduce array-size macros such as MAX_N).

Rules:
- Change only numeric constants in macro definitions, constant
  initializers and loop bounds.
- Do not add, remove, or modify any other code, including assertions.
- Keep the line structure of the program unchanged.

Output:
- Output only the resulting C program in triple-backtick C formatting.

C Program:
{program}
";

pub const MAP_PROPERTIES: &str = "You are an expert C programmer.

You are given a numbered list of properties and a numbered list of
assertions taken from a C program.

Properties:
{properties}

Assertions:
{assertions}

For each assertion, give the number of the single property it
expresses, or 0 if it expresses none of them.

Your answer should just be one line per assertion:
A1: <property number>
A2: <property number>
";

/// Appended to a prompt when the previous answer was rejected.
pub const RETRY: &str = "

Your previous answer was rejected:
{problem}

Previous answer:
```c
{previous}
```

Fix the problem and answer again, following all instructions above.
";

/// Replaces each `{name}` with its value. Unknown placeholders are kept.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        let hit = after.find('}').and_then(|end| {
            let name = &after[..end];
            values.iter().find(|(k, _)| *k == name).map(|(_, v)| (end, *v))
        });
        match hit {
            Some((end, v)) => {
                out.push_str(v);
                rest = &after[end + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

pub fn numbered(items: &[String]) -> String {
    items.iter().enumerate().map(|(i, p)| format!("{}. {p}", i + 1)).collect::<Vec<_>>().join("\n")
}
