#include <gtest/gtest.h>

#include <random>
#include <string>

#include "woe/csv.hpp"
#include "woe/repository.hpp"

namespace {

using woe::ErrorCode;
using woe::PredictionKind;

const std::string kitchen =
    "ID,correctAnswer,segmentationError,similarityError,wildError,noRecognitionError\n"
    "0,oats,cinnamon,flour,carrots,null\n"
    "1,flour,salt,oats,maple syrup,null\n";

ErrorCode error_of(const std::string& csv) {
    try {
        woe::parse_repository("r", csv);
    } catch (const woe::Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected a validation error";
    return ErrorCode::InvalidPayload;
}

const std::string header = "ID,correctAnswer,segmentationError,similarityError,wildError,noRecognitionError\n";

}  // namespace

TEST(Repository, ParsesKitchenRows) {
    const auto repo = woe::parse_repository("kitchen", kitchen);
    ASSERT_EQ(repo.size(), 2u);
    const auto& oats = repo.entries()[0];
    EXPECT_EQ(oats.id, 0u);
    EXPECT_EQ(oats.correct_answer, "oats");
    EXPECT_EQ(oats.segmentation_error, "cinnamon");
    EXPECT_EQ(oats.similarity_error, "flour");
    EXPECT_EQ(oats.wild_error, "carrots");
    EXPECT_EQ(repo.lookup("oats", PredictionKind::no_recognition), std::nullopt);

    const auto& flour = repo.entries()[1];
    EXPECT_EQ(flour.correct_answer, "flour");
    EXPECT_EQ(flour.segmentation_error, "salt");
    EXPECT_EQ(flour.similarity_error, "oats");
    EXPECT_EQ(flour.wild_error, "maple syrup");
}

TEST(Repository, Lookup) {
    const auto repo = woe::parse_repository("kitchen", kitchen);
    EXPECT_EQ(repo.lookup("oats", PredictionKind::similarity), "flour");
    EXPECT_EQ(repo.lookup("oats", PredictionKind::correct), "oats");
    EXPECT_EQ(repo.lookup("oats", PredictionKind::no_recognition), std::nullopt);
    EXPECT_EQ(repo.lookup("flour", PredictionKind::wild), "maple syrup");
    try {
        repo.lookup("quinoa", PredictionKind::correct);
        FAIL();
    } catch (const woe::Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownGroundTruth);
    }
}

TEST(Repository, ListGroundTruths) {
    EXPECT_EQ(woe::parse_repository("k", kitchen).list_ground_truths(), (std::vector<std::string>{"oats", "flour"}));
    EXPECT_EQ(woe::parse_repository("k", header + "7,egg,yolk,duck egg,bolt,\n").list_ground_truths(), std::vector<std::string>{"egg"});
}

TEST(Repository, ListMatchesCsvColumnOrder) {
    // Oracle: read the correctAnswer column straight off the CSV rows.
    std::mt19937 gen(11);
    for (int round = 0; round < 20; ++round) {
        std::string csv = header;
        std::vector<std::string> column;
        const int n = 1 + static_cast<int>(gen() % 30);
        for (int i = 0; i < n; ++i) {
            const std::string label = "label" + std::to_string(gen() % 1000) + "_" + std::to_string(i);
            column.push_back(label);
            csv += std::to_string(i) + "," + label + ",s" + std::to_string(i) + ",m" + std::to_string(i) + ",w" + std::to_string(i) + ",null\n";
        }
        std::vector<std::string> direct;
        for (const auto& row : woe::csv::parse(csv)) direct.push_back(row[1]);
        direct.erase(direct.begin());
        EXPECT_EQ(direct, column);
        EXPECT_EQ(woe::parse_repository("r", csv).list_ground_truths(), direct);
    }
}

TEST(Repository, ValidationErrors) {
    EXPECT_EQ(error_of(header + "0,oats,a,b,c,null\n1,oats,d,e,f,null\n"), ErrorCode::DuplicateLabel);
    EXPECT_EQ(error_of(header + "0,oats,a,b,c,null\n0,rice,d,e,f,null\n"), ErrorCode::DuplicateLabel);
    EXPECT_EQ(error_of(header + "0,oats,,b,c,null\n"), ErrorCode::EmptyLabel);
    EXPECT_EQ(error_of(header + "0,oats,a,b,  ,null\n"), ErrorCode::EmptyLabel);
    EXPECT_EQ(error_of(header + "0,oats,a,oats,c,null\n"), ErrorCode::SelfError);
    EXPECT_EQ(error_of(header + "0,oats,a,b,c,null,extra\n"), ErrorCode::MalformedCsv);
    EXPECT_EQ(error_of(header + "0,oats,a,b,c\n"), ErrorCode::MalformedCsv);
    EXPECT_EQ(error_of(header + "0,oats,a,b,c,rice\n"), ErrorCode::MalformedCsv);
    EXPECT_EQ(error_of(header + "x,oats,a,b,c,null\n"), ErrorCode::MalformedCsv);
    EXPECT_EQ(error_of(header + "-1,oats,a,b,c,null\n"), ErrorCode::MalformedCsv);
    EXPECT_EQ(error_of("ID,correct,segmentationError,similarityError,wildError,noRecognitionError\n0,a,b,c,d,null\n"), ErrorCode::MalformedCsv);
    EXPECT_EQ(error_of(header), ErrorCode::MalformedCsv);
    EXPECT_EQ(error_of(""), ErrorCode::MalformedCsv);
    EXPECT_EQ(error_of(header + "0,\"oats,a,b,c,null\n"), ErrorCode::MalformedCsv);
    EXPECT_EQ(error_of(header + "0,oats,a,b,\xff\xfe,null\n"), ErrorCode::MalformedCsv);
}

TEST(Repository, LenientInput) {
    // CRLF, surrounding whitespace, empty no-recognition column, BOM, blank lines.
    const auto repo = woe::parse_repository(
        "r", "\xEF\xBB\xBF" "ID,correctAnswer,segmentationError,similarityError,wildError,noRecognitionError\r\n"
             " 0 , oats ,cinnamon, flour,carrots,\r\n\r\n1,flour,salt,oats,maple syrup, null \r\n");
    EXPECT_EQ(repo.list_ground_truths(), (std::vector<std::string>{"oats", "flour"}));
    EXPECT_EQ(repo.lookup("oats", PredictionKind::similarity), "flour");
    EXPECT_EQ(repo.serialize(), kitchen);
}

TEST(Repository, ErrorLabelsNeedNotBeGroundTruths) {
    const auto repo = woe::parse_repository("k", kitchen);
    EXPECT_FALSE(repo.contains("cinnamon"));
    EXPECT_EQ(repo.lookup("oats", PredictionKind::segmentation), "cinnamon");
}

TEST(Repository, CaseSensitiveLabels) {
    const auto repo = woe::parse_repository("k", header + "0,Oats,oats,b,c,null\n1,oats,x,y,z,null\n");
    EXPECT_EQ(repo.lookup("Oats", PredictionKind::segmentation), "oats");
    EXPECT_TRUE(repo.contains("oats"));
}

TEST(Repository, SerializeRoundTripIsIdentityOnGeneratedRepositories) {
    std::mt19937 gen(3);
    const std::vector<std::string> pieces = {"salt", "maple syrup", "a,b", "say \"hi\"", "coconut oil", "éclair", "x"};
    for (int round = 0; round < 100; ++round) {
        std::vector<woe::RepositoryEntry> entries;
        const int n = 1 + static_cast<int>(gen() % 8);
        for (int i = 0; i < n; ++i) {
            woe::RepositoryEntry e;
            e.id = static_cast<std::uint64_t>(i * 3 + gen() % 3);
            e.correct_answer = "gt" + std::to_string(i) + pieces[gen() % pieces.size()];
            e.segmentation_error = pieces[gen() % pieces.size()];
            e.similarity_error = pieces[gen() % pieces.size()];
            e.wild_error = pieces[gen() % pieces.size()];
            entries.push_back(e);
        }
        const woe::ErrorRepository repo("gen", entries);
        const auto bytes = repo.serialize();
        const auto again = woe::parse_repository("gen", bytes);
        EXPECT_EQ(again.entries(), repo.entries());
        EXPECT_EQ(again.serialize(), bytes);
    }
}

TEST(Repository, ErrorLookupNeverReturnsCorrectAnswer) {
    const auto repo = woe::parse_repository("k", kitchen);
    for (const auto& e : repo.entries()) {
        EXPECT_EQ(repo.lookup(e.correct_answer, PredictionKind::correct), e.correct_answer);
        for (auto kind : woe::error_kinds) EXPECT_NE(repo.lookup(e.correct_answer, kind), e.correct_answer);
    }
}
