#!/usr/bin/env python3
# Copyright 2026 The baved-ser Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Converts published wav2vec2/HuBERT checkpoints for the native encoder.

Each reference is written to <root>/<ref with "/" replaced by "__">/ as
config.json, a single model.safetensors holding the bare encoder (any CTC
head is dropped) and preprocessor_config.json.

    python tools/convert_checkpoint.py --root checkpoints
    python tools/convert_checkpoint.py --root checkpoints facebook/hubert-base-ls960
"""

import argparse
import pathlib

DEFAULT_REFS = [
    "elgeish/wav2vec2-large-xlsr-53-arabic",
    "facebook/hubert-base-ls960",
    "facebook/hubert-large-ll60k",
]


def convert(ref: str, root: pathlib.Path) -> pathlib.Path:
    import transformers

    config = transformers.AutoConfig.from_pretrained(ref)
    model_cls = transformers.HubertModel if config.model_type == "hubert" else transformers.Wav2Vec2Model
    model = model_cls.from_pretrained(ref)
    model.eval()

    target = root / ref.replace("/", "__")
    target.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(target, safe_serialization=True, max_shard_size="100GB")
    transformers.AutoFeatureExtractor.from_pretrained(ref).save_pretrained(target)
    return target


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("refs", nargs="*", default=DEFAULT_REFS, help="checkpoint references")
    parser.add_argument("--root", type=pathlib.Path, default=pathlib.Path("checkpoints"))
    args = parser.parse_args()
    for ref in args.refs:
        print(f"{ref} -> {convert(ref, args.root)}")


if __name__ == "__main__":
    main()
