// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "crag/errors.hpp"
#include "crag/knowledge_store.hpp"
#include "support/fixtures.hpp"

namespace crag {
namespace {

KnowledgeDocument crag_doc(const std::string& product, const std::string& text) {
    KnowledgeDocument doc;
    doc.product_id = product;
    doc.method = Method::crag;
    doc.text = text;
    doc.summaries.push_back({product, 0, text, 2, {0, 3}});
    doc.created_with = {4, 7, "deterministic-test/768", "mock", "abc", false};
    return doc;
}

KnowledgeDocument rag_doc(const std::string& product, const std::string& text) {
    KnowledgeDocument doc;
    doc.product_id = product;
    doc.method = Method::rag;
    doc.text = text;
    doc.review_indexes = {0, 1, 2};
    doc.created_with.input_hash = "abc";
    return doc;
}

TEST(KnowledgeStore, StoreThenLoadIsEqual) {
    testing::TempDir dir;
    const auto doc = crag_doc("P", "summary \"quoted\"\nline two \xC3\xA9");
    store_knowledge(doc, dir / "k.jsonl");
    EXPECT_EQ(load_knowledge(dir / "k.jsonl", "P", Method::crag), doc);
}

TEST(KnowledgeStore, UnknownProductAndMissingMethodAreDistinguished) {
    testing::TempDir dir;
    store_knowledge(crag_doc("P", "x"), dir / "k.jsonl");
    try {
        load_knowledge(dir / "k.jsonl", "Q", Method::crag);
        FAIL();
    } catch (const NotFoundError& e) {
        EXPECT_EQ(e.missing(), NotFoundError::Missing::product);
    }
    try {
        load_knowledge(dir / "k.jsonl", "P", Method::rag);
        FAIL();
    } catch (const NotFoundError& e) {
        EXPECT_EQ(e.missing(), NotFoundError::Missing::method);
    }
}

TEST(KnowledgeStore, MissingFileBehavesAsEmpty) {
    testing::TempDir dir;
    const KnowledgeStore store(dir / "absent.jsonl");
    EXPECT_TRUE(store.products().empty());
    EXPECT_THROW(store.get("P", Method::crag), NotFoundError);
}

TEST(KnowledgeStore, TwoMethodsAreIndependentlyRetrievable) {
    testing::TempDir dir;
    KnowledgeStore store(dir / "k.jsonl");
    store.put(crag_doc("P", "short"));
    store.put(rag_doc("P", "- a\n- b\n- c"));
    EXPECT_EQ(store.get("P", Method::crag).text, "short");
    EXPECT_EQ(store.get("P", Method::rag).text, "- a\n- b\n- c");
    EXPECT_EQ(store.methods("P"), (std::vector<Method>{Method::crag, Method::rag}));
}

TEST(KnowledgeStore, LatestPutWinsAndSurvivesReopen) {
    testing::TempDir dir;
    {
        KnowledgeStore store(dir / "k.jsonl");
        store.put(crag_doc("P", "v1"));
        store.put(crag_doc("Q", "q"));
        store.put(crag_doc("P", "v2"));
    }
    const KnowledgeStore reopened(dir / "k.jsonl");
    EXPECT_EQ(reopened.get("P", Method::crag).text, "v2");
    EXPECT_EQ(reopened.products(), (std::vector<std::string>{"P", "Q"}));
}

TEST(KnowledgeStore, TornRecordIsInvisibleAndCutOnNextWrite) {
    testing::TempDir dir;
    const auto path = dir / "k.jsonl";
    {
        KnowledgeStore store(path);
        store.put(crag_doc("P", "committed"));
    }
    const auto committed_size = std::filesystem::file_size(path);
    {
        std::ofstream out(path, std::ios::app | std::ios::binary);
        out << R"({"product_id":"P","method":"CRAG","text":"half-writ)";
    }
    KnowledgeStore store(path);
    EXPECT_EQ(store.get("P", Method::crag).text, "committed");
    store.put(rag_doc("P", "- r"));
    const KnowledgeStore reopened(path);
    EXPECT_EQ(reopened.get("P", Method::crag).text, "committed");
    EXPECT_EQ(reopened.get("P", Method::rag).text, "- r");
    EXPECT_GT(std::filesystem::file_size(path), committed_size);
}

TEST(KnowledgeStore, TornIndexLineIsIgnored) {
    testing::TempDir dir;
    const auto path = dir / "k.jsonl";
    {
        KnowledgeStore store(path);
        store.put(crag_doc("P", "one"));
    }
    {
        std::ofstream out(KnowledgeStore::index_path(path), std::ios::app | std::ios::binary);
        out << R"({"product_id":"Q","meth)";
    }
    const KnowledgeStore store(path);
    EXPECT_EQ(store.products(), (std::vector<std::string>{"P"}));
}

TEST(KnowledgeStore, CorruptIndexLineIsAStorageError) {
    testing::TempDir dir;
    const auto path = dir / "k.jsonl";
    store_knowledge(crag_doc("P", "one"), path);
    {
        std::ofstream out(KnowledgeStore::index_path(path), std::ios::app | std::ios::binary);
        out << "not json\n";
    }
    try {
        KnowledgeStore store(path);
        FAIL();
    } catch (const StorageError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(KnowledgeStore, EmptyProductIdIsRejected) {
    testing::TempDir dir;
    KnowledgeStore store(dir / "k.jsonl");
    EXPECT_THROW(store.put(crag_doc("", "x")), ContractError);
}

}  // namespace
}  // namespace crag
