#include <string>
#include <string_view>

#include "fire/error.hpp"
#include "fire/judge.hpp"

namespace fire {

namespace {

// Templates are reproduced byte for byte, trailing spaces included.
constexpr std::string_view kCompareQuality = R"PROMPT(Compare two text excerpts and choose the text which contain more informative signal for pretraining a large-language model.

An informative datapoint should be well-formatted, contain some usable knowledge of the world, and strictly NOT have any harmful, racist, sexist, etc. content. Aspects that should NOT influence your judgement:
1. The length of the text
2. The order in which the texts are presented

Note that the texts are cut off, so you have to infer their contexts. The texts might have similar quality, but you should still make a relative judgement and choose the label of the preferred text. 

[Option A]
... {text a} ...
[Option B]
... {text b} ...

Now you have to choose between either A or B. Respond only with a single word.)PROMPT";

constexpr std::string_view kDimensionCheck = R"PROMPT(You are a data annotation expert. You should judge that {condition}

Aspects that should NOT influence your judgement: 
1. Which language the text is written in 
2. The length of the text 
3. The order in which the texts are presented 

Note that the texts are cut off, so you have to infer their contexts.
Here is the text:
[TEXT BEGIN]
{text}
[TEXT END]

Please follow the question order to respond. For answer, only respond yes or no.
Return the results for each question in the following json format:
[{
"quesion": "Is this text has a polished and beautiful writing style ?",
"reason": "Fill in the reason for the judgment here",
"answer": "yes/no"
},
...])PROMPT";

std::string substitute(std::string_view tmpl, std::string_view slot1, std::string_view value1,
                       std::string_view slot2, std::string_view value2) {
    std::string out;
    out.reserve(tmpl.size() + value1.size() + value2.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto p1 = tmpl.find(slot1, pos);
        const auto p2 = tmpl.find(slot2, pos);
        const auto next = std::min(p1, p2);
        if (next == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, next - pos));
        if (next == p1) {
            out.append(value1);
            pos = next + slot1.size();
        } else {
            out.append(value2);
            pos = next + slot2.size();
        }
    }
    return out;
}

} // namespace

std::string_view to_string(PromptTemplate t) {
    return t == PromptTemplate::compare_quality ? "compare_quality" : "dimension_check";
}

std::string render_compare_prompt(std::string_view text_a, std::string_view text_b) {
    if (text_a.empty() || text_b.empty()) throw ArgumentError("render_prompt: empty text");
    return substitute(kCompareQuality, "{text a}", text_a, "{text b}", text_b);
}

std::string render_dimension_prompt(std::string_view text, std::string_view condition) {
    if (text.empty()) throw ArgumentError("render_prompt: empty text");
    if (condition.empty()) throw ArgumentError("render_prompt: empty condition");
    return substitute(kDimensionCheck, "{text}", text, "{condition}", condition);
}

std::string render_prompt(PromptTemplate t, std::string_view first, std::string_view second) {
    return t == PromptTemplate::compare_quality ? render_compare_prompt(first, second)
                                                : render_dimension_prompt(first, second);
}

} // namespace fire
