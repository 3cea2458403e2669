import pytest

from compgen import ConceptVocabulary, VocabularyError, load_vocabulary, save_vocabulary


def test_ids_follow_entry_order():
    vocab = ConceptVocabulary(["dog", "cat", "sofa"])
    assert vocab.id_of == {"dog": 0, "cat": 1, "sofa": 2}
    assert vocab.lemma(1) == "cat"
    assert len(vocab) == 3
    assert "cat" in vocab
    assert "zebra" not in vocab


@pytest.mark.parametrize(
    "entries,fragment",
    [
        ([], "empty"),
        (["dog", ""], "empty"),
        (["dog", "Cat"], "lowercase"),
        (["dog", "hot dog"], "single token"),
        (["dog", "dog"], "duplicate"),
    ],
)
def test_invalid_entries_rejected(entries, fragment):
    with pytest.raises(VocabularyError, match=fragment):
        ConceptVocabulary(entries)


def test_load_skips_comments_and_blanks(tmp_path):
    p = tmp_path / "vocab.txt"
    p.write_text("# objects\n\ndog\ncat\n# more\nsofa\n", encoding="utf-8")
    vocab = load_vocabulary(p)
    assert vocab.entries == ["dog", "cat", "sofa"]


def test_load_empty_file_rejected(tmp_path):
    p = tmp_path / "vocab.txt"
    p.write_text("# nothing here\n", encoding="utf-8")
    with pytest.raises(VocabularyError):
        load_vocabulary(p)


def test_save_load_round_trip(tmp_path):
    vocab = ConceptVocabulary(["dog", "cat", "sofa"])
    p = tmp_path / "vocab.txt"
    save_vocabulary(vocab, p)
    again = load_vocabulary(p)
    assert again.entries == vocab.entries
    assert again.id_of == vocab.id_of


def test_warn_unstable_entries(caplog):
    # "dogs" lemmatizes to "dog", so a caption token can never match it
    vocab = ConceptVocabulary(["dog", "dogs"])
    with caplog.at_level("WARNING"):
        unstable = vocab.warn_unstable_entries()
    assert unstable == ["dogs"]
    assert any("dogs" in rec.message for rec in caplog.records)


def test_stable_vocab_warns_nothing(mini_vocab):
    assert mini_vocab.warn_unstable_entries() == []
