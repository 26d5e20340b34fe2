#!/usr/bin/env python3
"""Offline fine-tuning of the extractive reader on a review QA dataset.

Builds (question, review, answer-span) training rows from a dataset
directory (the same CSV layout the engine loads), keeping the published
recipe: 3 epochs, batch size 16, learning rate 1e-5 with 0.2 warmup,
384-token sequences with a 128-token stride, and no-answer examples
preserved. Run on a machine with the [models] extra installed; the served
reader checkpoint is whatever --output-dir you point the sidecar at.

Usage:
    python finetune_reader.py DATASET_DIR --output-dir ./reader-finetuned \
        [--base-model deepset/minilm-uncased-squad2] [--split train]
"""

import argparse
import sys

EPOCHS = 3
BATCH_SIZE = 16
LEARNING_RATE = 1e-5
WARMUP_RATIO = 0.2
MAX_SEQ_LENGTH = 384
DOC_STRIDE = 128


def build_rows(dataset_dir: str, split: str) -> list:
    from neuroquery.harness import load_dataset, review_documents, split_of

    bundle = load_dataset(dataset_dir)
    rows = []
    for example in bundle.examples:
        if split != "all" and split_of(example.asin) != split:
            continue
        for review_id, text in review_documents(bundle.kb, example.asin):
            starts = []
            answers = []
            for gold in example.gold_answers:
                position = text.lower().find(str(gold).lower())
                if position >= 0:
                    starts.append(position)
                    answers.append(text[position:position + len(str(gold))])
            rows.append({
                "id": f"{example.qid}:{review_id}",
                "question": example.question,
                "context": text,
                # empty answer lists are the no-answer training signal
                "answers": {"text": answers, "answer_start": starts},
            })
    return rows


def preprocess(rows: list, tokenizer):
    def encode(batch):
        encoded = tokenizer(
            batch["question"], batch["context"], truncation="only_second",
            max_length=MAX_SEQ_LENGTH, stride=DOC_STRIDE,
            return_overflowing_tokens=True, return_offsets_mapping=True,
            padding="max_length")
        sample_map = encoded.pop("overflow_to_sample_mapping")
        offsets = encoded.pop("offset_mapping")
        start_positions = []
        end_positions = []
        for i, offset in enumerate(offsets):
            sample = sample_map[i]
            answer = batch["answers"][sample]
            cls_index = encoded["input_ids"][i].index(tokenizer.cls_token_id)
            if not answer["text"]:
                start_positions.append(cls_index)
                end_positions.append(cls_index)
                continue
            start_char = answer["answer_start"][0]
            end_char = start_char + len(answer["text"][0])
            sequence_ids = encoded.sequence_ids(i)
            context_start = sequence_ids.index(1)
            context_end = len(sequence_ids) - 1 - sequence_ids[::-1].index(1)
            if offset[context_start][0] > start_char \
                    or offset[context_end][1] < end_char:
                start_positions.append(cls_index)
                end_positions.append(cls_index)
                continue
            token_start = context_start
            while token_start <= context_end and offset[token_start][0] <= start_char:
                token_start += 1
            token_end = context_end
            while token_end >= context_start and offset[token_end][1] >= end_char:
                token_end -= 1
            start_positions.append(token_start - 1)
            end_positions.append(token_end + 1)
        encoded["start_positions"] = start_positions
        encoded["end_positions"] = end_positions
        return encoded

    return encode


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("dataset_dir")
    parser.add_argument("--output-dir", required=True)
    parser.add_argument("--base-model", default="deepset/minilm-uncased-squad2")
    parser.add_argument("--split", default="train",
                        choices=["train", "val", "test", "all"])
    args = parser.parse_args()

    try:
        from datasets import Dataset
        from transformers import (AutoModelForQuestionAnswering, AutoTokenizer,
                                  TrainingArguments, Trainer,
                                  default_data_collator)
    except ImportError:
        print("fine-tuning needs the [models] extra plus the datasets package",
              file=sys.stderr)
        return 1

    rows = build_rows(args.dataset_dir, args.split)
    if not rows:
        print("no training rows in the requested split", file=sys.stderr)
        return 1
    print(f"training rows: {len(rows)} "
          f"(no-answer: {sum(1 for r in rows if not r['answers']['text'])})")

    tokenizer = AutoTokenizer.from_pretrained(args.base_model)
    model = AutoModelForQuestionAnswering.from_pretrained(args.base_model)
    dataset = Dataset.from_list(rows)
    encoded = dataset.map(preprocess(rows, tokenizer), batched=True,
                          remove_columns=dataset.column_names)

    arguments = TrainingArguments(
        output_dir=args.output_dir,
        num_train_epochs=EPOCHS,
        per_device_train_batch_size=BATCH_SIZE,
        learning_rate=LEARNING_RATE,
        warmup_ratio=WARMUP_RATIO,
        save_strategy="epoch",
        logging_steps=50,
    )
    trainer = Trainer(model=model, args=arguments, train_dataset=encoded,
                      data_collator=default_data_collator)
    trainer.train()
    trainer.save_model(args.output_dir)
    tokenizer.save_pretrained(args.output_dir)
    print(f"saved fine-tuned reader to {args.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
