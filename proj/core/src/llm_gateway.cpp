// SPDX-License-Identifier: Apache-2.0

#include "crag/llm_gateway.hpp"

#include <condition_variable>
#include <mutex>
#include <unordered_set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "crag/concurrency.hpp"
#include "crag/errors.hpp"
#include "crag/http_client.hpp"
#include "crag/tokenizer.hpp"

namespace crag {
namespace {

constexpr std::string_view open_brace = "{{";
constexpr std::string_view close_brace = "}}";

/// Calls on_text for literal runs and on_placeholder for each `{{NAME}}`.
template <typename Text, typename Placeholder>
void scan_placeholders(const std::string& body, Text&& on_text, Placeholder&& on_placeholder) {
    std::size_t pos = 0;
    while (pos < body.size()) {
        const auto open = body.find(open_brace, pos);
        if (open == std::string::npos) {
            break;
        }
        const auto close = body.find(close_brace, open + open_brace.size());
        if (close == std::string::npos) {
            break;
        }
        on_text(std::string_view(body).substr(pos, open - pos));
        const std::string name = body.substr(open + open_brace.size(), close - open - open_brace.size());
        on_placeholder(name, std::string_view(body).substr(open, close + close_brace.size() - open));
        pos = close + close_brace.size();
    }
    on_text(std::string_view(body).substr(std::min(pos, body.size())));
}

/// First sentence: up to and including the first run of '.', '!' or '?' that is followed
/// by whitespace or the end. Trimmed; the whole text when there is no terminator.
std::string first_sentence(std::string_view text) {
    const auto is_terminal = [](char c) { return c == '.' || c == '!' || c == '?'; };
    const auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
    std::size_t i = 0;
    while (i < text.size()) {
        if (is_terminal(text[i])) {
            std::size_t end = i;
            while (end < text.size() && is_terminal(text[end])) {
                ++end;
            }
            if (end == text.size() || is_ws(text[end])) {
                text = text.substr(0, end);
                break;
            }
            i = end;
        } else {
            ++i;
        }
    }
    std::size_t b = 0;
    std::size_t e = text.size();
    while (b < e && is_ws(text[b])) {
        ++b;
    }
    while (e > b && is_ws(text[e - 1])) {
        --e;
    }
    return std::string(text.substr(b, e - b));
}

/// Cuts `text` after its first `budget` builtin tokens.
std::string truncate_tokens(const std::string& text, std::size_t budget) {
    const auto spans = segment(text);
    if (spans.size() <= budget) {
        return text;
    }
    return budget == 0 ? std::string{} : text.substr(0, spans[budget - 1].end);
}

/// Splits a "- a\n- b" list back into items; lines without the marker continue the previous item.
std::vector<std::string> parse_bullets(const std::string& list) {
    std::vector<std::string> items;
    std::size_t pos = 0;
    while (pos <= list.size()) {
        auto end = list.find('\n', pos);
        if (end == std::string::npos) {
            end = list.size();
        }
        const std::string_view line = std::string_view(list).substr(pos, end - pos);
        if (line.starts_with("- ")) {
            items.emplace_back(line.substr(2));
        } else if (!items.empty()) {
            items.back() += '\n';
            items.back() += line;
        } else if (!line.empty()) {
            items.emplace_back(line);
        }
        pos = end + 1;
    }
    return items;
}

std::string binding_or_empty(const ChatRequest& request, const std::string& name) {
    const auto it = request.bindings.find(name);
    return it == request.bindings.end() ? std::string{} : it->second;
}

class Semaphore {
public:
    explicit Semaphore(std::size_t limit) : limit_(limit) {}

    void acquire() {
        if (limit_ == 0) {
            return;
        }
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return in_flight_ < limit_; });
        ++in_flight_;
    }

    void release() {
        if (limit_ == 0) {
            return;
        }
        {
            std::lock_guard lock(mutex_);
            --in_flight_;
        }
        cv_.notify_one();
    }

private:
    std::size_t limit_;
    std::size_t in_flight_ = 0;
    std::mutex mutex_;
    std::condition_variable cv_;
};

}  // namespace

// --- templates ----------------------------------------------------------------

PromptTemplate::PromptTemplate(std::string body, std::set<std::string> required)
    : body_(std::move(body)), required_(std::move(required)) {
    std::map<std::string, int> seen;
    scan_placeholders(body_, [](std::string_view) {}, [&](const std::string& name, std::string_view) { ++seen[name]; });
    for (const auto& name : required_) {
        const int count = seen[name];
        if (count != 1) {
            throw ContractError("template placeholder '" + name + "' occurs " + std::to_string(count) +
                                " times, expected exactly once");
        }
    }
}

PromptTemplate PromptTemplate::from_body(std::string body) {
    std::set<std::string> names;
    scan_placeholders(body, [](std::string_view) {}, [&](const std::string& name, std::string_view) {
        names.insert(name);
    });
    return PromptTemplate(std::move(body), std::move(names));
}

std::string render_template(const PromptTemplate& prompt, const Bindings& bindings) {
    for (const auto& name : prompt.required()) {
        if (!bindings.contains(name)) {
            throw ContractError("missing binding for placeholder '" + name + "'");
        }
    }
    for (const auto& [name, value] : bindings) {
        if (!prompt.required().contains(name)) {
            throw ContractError("binding '" + name + "' does not match any placeholder");
        }
    }
    std::string out;
    out.reserve(prompt.body().size());
    scan_placeholders(
        prompt.body(), [&](std::string_view text) { out += text; },
        [&](const std::string& name, std::string_view raw) {
            if (prompt.required().contains(name)) {
                out += bindings.at(name);
            } else {
                out += raw;
            }
        });
    return out;
}

const PromptTemplate& summarization_template() {
    static const PromptTemplate instance(
        "[INST] Given a series of reviews, create a concise summary that effectively conveys the overall "
        "sentiment and key themes without directly quoting the reviews. Focus on distilling the main ideas and "
        "emotions expressed in the reviews, providing a clear and accurate representation of the conversation's "
        "tone and content. Do not reference the reviews.\n"
        "\n"
        "Reviews: {{PRODUCT_REVIEWS}}\n"
        "\n"
        "Question: {{ONESHOT_QUESTION}} [/INST]\n"
        "\n"
        "Answer: {{ONESHOT_ANSWER}}",
        {"PRODUCT_REVIEWS", "ONESHOT_QUESTION", "ONESHOT_ANSWER"});
    return instance;
}

const PromptTemplate& qa_template() {
    static const PromptTemplate instance(
        "You will be provided with a set of descriptions of messages. You will also be provided with a "
        "question. Given these descriptions, answer the question in 300 words. If applicable, apply examples to "
        "justify your answer. Answer in bullet points.\n"
        "\n"
        "Related descriptions: {{KNOWLEDGE}}\n"
        "\n"
        "Question: {{USER_QUESTION}}",
        {"KNOWLEDGE", "USER_QUESTION"});
    return instance;
}

std::string bullet_list(std::span<const std::string> reviews) {
    std::string out;
    for (std::size_t i = 0; i < reviews.size(); ++i) {
        if (i > 0) {
            out += '\n';
        }
        out += "- ";
        out += reviews[i];
    }
    return out;
}

ChatRequest summarization_request(std::span<const std::string> reviews, const OneShotExample& example,
                                  const std::string& model) {
    if (reviews.empty()) {
        throw ContractError("summarization_request: no reviews to summarize");
    }
    for (const auto& review : reviews) {
        if (review.find("[/INST]") != std::string::npos || review.find("[INST]") != std::string::npos) {
            spdlog::warn("review text contains an instruction delimiter; passing it through unchanged: {:.60}",
                         review);
        }
    }
    ChatRequest request;
    request.kind = PromptKind::summarization;
    request.model = model;
    request.bindings = {{"PRODUCT_REVIEWS", bullet_list(reviews)},
                        {"ONESHOT_QUESTION", example.question},
                        {"ONESHOT_ANSWER", example.answer}};
    request.prompt = render_template(summarization_template(), request.bindings);
    return request;
}

ChatRequest qa_request(const std::string& knowledge, const std::string& question, const std::string& model) {
    if (knowledge.empty()) {
        throw ContractError("qa_request: knowledge is empty");
    }
    if (question.empty()) {
        throw ContractError("qa_request: question is empty");
    }
    ChatRequest request;
    request.kind = PromptKind::question_answering;
    request.model = model;
    request.bindings = {{"KNOWLEDGE", knowledge}, {"USER_QUESTION", question}};
    request.prompt = render_template(qa_template(), request.bindings);
    return request;
}

// --- completion ------------------------------------------------------------------

ChatResponse complete(const ChatRequest& request, ChatBackend& backend, const RetryPolicy& retry) {
    if (request.prompt.empty()) {
        throw ContractError("chat request has an empty prompt");
    }
    ChatResponse response = with_retries(retry, "completion via '" + backend.id() + "'", [&](int attempt) {
        ChatResponse r = backend.send(request);
        r.attempts = attempt;
        return r;
    });
    if (response.text.empty()) {
        throw GenerationError("backend '" + backend.id() + "' returned an empty answer");
    }
    if (response.model.empty()) {
        response.model = backend.id();
    }
    response.correlation_id = request.correlation_id;
    return response;
}

MockChatBackend::MockChatBackend(std::string id, std::size_t budget) : id_(std::move(id)), budget_(budget) {
    if (budget_ == 0) {
        throw ConfigError("mock backend budget must be at least 1 token");
    }
}

ChatResponse MockChatBackend::send(const ChatRequest& request) {
    std::string text;
    switch (request.kind) {
        case PromptKind::summarization: {
            std::unordered_set<std::string> seen;
            std::size_t used = 0;
            for (const auto& bullet : parse_bullets(binding_or_empty(request, "PRODUCT_REVIEWS"))) {
                std::string sentence = first_sentence(bullet);
                if (sentence.empty() || !seen.insert(sentence).second) {
                    continue;
                }
                const std::size_t cost = count_builtin_tokens(sentence);
                if (text.empty() && cost > budget_) {
                    text = truncate_tokens(sentence, budget_);
                    break;
                }
                if (used + cost > budget_) {
                    break;
                }
                if (!text.empty()) {
                    text += ' ';
                }
                text += sentence;
                used += cost;
            }
            break;
        }
        case PromptKind::question_answering: {
            const std::string knowledge = binding_or_empty(request, "KNOWLEDGE");
            std::size_t taken = 0;
            std::size_t pos = 0;
            while (taken < 3 && pos <= knowledge.size()) {
                auto end = knowledge.find('\n', pos);
                if (end == std::string::npos) {
                    end = knowledge.size();
                }
                std::string_view line = std::string_view(knowledge).substr(pos, end - pos);
                pos = end + 1;
                if (line.starts_with("- ")) {
                    line.remove_prefix(2);
                }
                if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
                    continue;
                }
                if (taken > 0) {
                    text += '\n';
                }
                text += "- ";
                text += line;
                ++taken;
            }
            break;
        }
        case PromptKind::other:
            text = truncate_tokens(first_sentence(request.prompt), budget_);
            break;
    }
    ChatResponse response;
    response.text = std::move(text);
    response.model = id_;
    response.usage = Usage{count_builtin_tokens(request.prompt), count_builtin_tokens(response.text)};
    response.correlation_id = request.correlation_id;
    return response;
}

RemoteChatBackend::RemoteChatBackend(RemoteBackendConfig config) : config_(std::move(config)) {
    if (config_.id.empty()) {
        throw ConfigError("remote backend needs an id");
    }
    if (config_.endpoint.empty()) {
        throw ConfigError("remote backend '" + config_.id + "' needs an endpoint");
    }
}

ChatResponse RemoteChatBackend::send(const ChatRequest& request) {
    std::string prompt = request.prompt;
    if (config_.wrap_inst && request.kind == PromptKind::question_answering) {
        prompt = "[INST] " + prompt + " [/INST]";
    }
    const nlohmann::json body{
        {"model", config_.model.empty() ? config_.id : config_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", request.decoding.temperature},
        {"max_tokens", request.decoding.max_output_tokens},
    };
    std::vector<std::pair<std::string, std::string>> headers;
    if (const std::string token = env_or_empty(config_.auth_env); !token.empty()) {
        headers.emplace_back("Authorization", "Bearer " + token);
    }
    if (!request.correlation_id.empty()) {
        headers.emplace_back("X-Correlation-Id", request.correlation_id);
    }

    const HttpResponse http = post_json(config_.endpoint, body.dump(), headers, config_.timeout);
    if (http.status != 200) {
        throw GenerationError("backend '" + config_.id + "' returned HTTP " + std::to_string(http.status) + ": " +
                              http.body.substr(0, 200));
    }
    ChatResponse response;
    response.model = config_.id;
    response.correlation_id = request.correlation_id;
    try {
        const auto parsed = nlohmann::json::parse(http.body);
        response.text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
        if (parsed.contains("usage") && parsed["usage"].is_object()) {
            const auto& usage = parsed["usage"];
            response.usage = Usage{usage.value("prompt_tokens", std::size_t{0}),
                                   usage.value("completion_tokens", std::size_t{0})};
        }
    } catch (const nlohmann::json::exception& e) {
        throw GenerationError("backend '" + config_.id + "' returned an unexpected body: " + e.what());
    }
    return response;
}

// --- gateway ---------------------------------------------------------------------

struct Gateway::Route {
    std::shared_ptr<ChatBackend> backend;
    mutable Semaphore slots;

    Route(std::shared_ptr<ChatBackend> b, std::size_t limit) : backend(std::move(b)), slots(limit) {}
};

Gateway::Gateway(RetryPolicy retry) : retry_(std::move(retry)) {}

Gateway::~Gateway() = default;

void Gateway::add_backend(std::shared_ptr<ChatBackend> backend, std::size_t concurrency_limit) {
    if (!backend) {
        throw ContractError("gateway: null backend");
    }
    const std::string id = backend->id();
    routes_[id] = std::make_unique<Route>(std::move(backend), concurrency_limit);
}

bool Gateway::has_backend(const std::string& id) const {
    return routes_.contains(id);
}

std::vector<std::string> Gateway::backend_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, route] : routes_) {
        ids.push_back(id);
    }
    return ids;
}

const Gateway::Route& Gateway::route(const std::string& id) const {
    const auto it = routes_.find(id);
    if (it == routes_.end()) {
        throw ConfigError("no backend configured for model '" + id + "'");
    }
    return *it->second;
}

ChatResponse Gateway::complete(const ChatRequest& request) const {
    const Route& r = route(request.model);
    r.slots.acquire();
    try {
        ChatResponse response = crag::complete(request, *r.backend, retry_);
        r.slots.release();
        return response;
    } catch (...) {
        r.slots.release();
        throw;
    }
}

std::vector<ChatOutcome> Gateway::complete_all(std::span<const ChatRequest> requests) const {
    std::vector<ChatOutcome> outcomes(requests.size());
    parallel_for_bounded(requests.size(), 0, [&](std::size_t i) {
        try {
            outcomes[i].response = complete(requests[i]);
        } catch (...) {
            outcomes[i].error = std::current_exception();
        }
    });
    return outcomes;
}

}  // namespace crag
