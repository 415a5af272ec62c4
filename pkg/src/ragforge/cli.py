"""ragforge command line.

    ragforge ingest --corpus Data --store kb
    ragforge ask --store kb                      # REPL, type 'exit' to quit
    ragforge ask --store kb --once "question"    # one answer, for scripts
    ragforge stores list | stores delete NAME
    ragforge remote sync | remote ask [--once Q]

Exit codes: 0 success, 1 operational error, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

from . import vector_store
from .chunker import ChunkConfig
from .config import CliConfig
from .embedding import Backend as EmbedBackend
from .embedding import Embedder, EmbedderSpec
from .errors import MissingApiKey, NotFound, RagError
from .generation import Backend, ConversationSession, GenerationConfig, chat_turn
from .ingest import CleanConfig
from .pipeline import index_corpus
from .remote_assistant import AssistantClient, AssistantProfile
from .retrieval import DEFAULT_TEMPLATE, PromptTemplate

PROMPT = "Enter your question (or type 'exit' to quit): "
FAREWELL = "Exiting the conversation. Goodbye!"
TYPEWRITER_DELAY_S = 0.05


def _add_store_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--store", dest="store.name", metavar="NAME", help="vector store name")
    p.add_argument("--store-root", dest="store.root", metavar="DIR", help="directory holding stores")
    p.add_argument("--dimension", dest="embedding.dimension", type=int, metavar="D", help="embedding dimension")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ragforge", description="PDF-grounded retrieval-augmented generation.")
    parser.add_argument("--config", metavar="FILE", help="config file (default: ./ragforge.toml if present)")
    parser.add_argument("--env-file", metavar="FILE", help="dotenv file holding OPENAI_API_KEY (default: ./.env)")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="extract, chunk, embed and index a corpus directory")
    _add_store_flags(ingest)
    ingest.add_argument("--corpus", dest="corpus.dir", metavar="DIR", help="directory of .txt/.pdf files")
    ingest.add_argument("--chunk-max", dest="chunk.max_tokens", type=int, metavar="N")
    ingest.add_argument("--chunk-overlap", dest="chunk.overlap", type=int, metavar="N")
    ingest.add_argument("--chunk-mode", dest="chunk.mode", choices=["fixed", "semantic"])

    ask = sub.add_parser("ask", help="answer questions from an indexed store")
    _add_store_flags(ask)
    ask.add_argument("--k", dest="retrieve.k", type=int, metavar="K", help="chunks to retrieve (default 4)")
    ask.add_argument("--min-score", dest="retrieve.min_score", type=float, metavar="S")
    ask.add_argument("--backend", dest="generation.backend", choices=["chat", "local", "offline"])
    ask.add_argument("--model", dest="generation.model")
    ask.add_argument("--temperature", dest="generation.temperature", type=float)
    ask.add_argument("--top-p", dest="generation.top_p", type=float)
    ask.add_argument("--endpoint", dest="generation.endpoint", metavar="URL")
    ask.add_argument("--template", dest="prompt.template_path", metavar="FILE", help="prompt template override")
    ask.add_argument("--once", metavar="QUESTION", help="answer one question and exit")
    ask.add_argument("--typewriter", action="store_true", help="print answers word by word")

    stores = sub.add_parser("stores", help="list or delete local stores")
    stores.add_argument("--store-root", dest="store.root", metavar="DIR")
    stores_sub = stores.add_subparsers(dest="action", required=True)
    stores_sub.add_parser("list", help="show store manifests")
    delete = stores_sub.add_parser("delete", help="remove a store")
    delete.add_argument("name")

    remote = sub.add_parser("remote", help="use a managed assistant with hosted file search")
    remote.add_argument("--endpoint", dest="remote.endpoint", metavar="URL")
    remote.add_argument("--vector-store", dest="remote.vector_store", metavar="NAME")
    remote.add_argument("--assistant-name", dest="remote.assistant_name", metavar="NAME")
    remote.add_argument("--poll-interval", dest="remote.poll_interval_s", type=float, metavar="S")
    remote.add_argument("--max-polls", dest="remote.max_polls", type=int, metavar="N")
    remote_sub = remote.add_subparsers(dest="action", required=True)
    sync = remote_sub.add_parser("sync", help="get-or-create vector store (uploading PDFs) and assistant")
    sync.add_argument("--upload-dir", dest="remote.upload_dir", metavar="DIR")
    sync.add_argument("--model", dest="remote.model")
    remote_ask = remote_sub.add_parser("ask", help="ask the remote assistant")
    remote_ask.add_argument("--once", metavar="QUESTION")
    remote_ask.add_argument("--typewriter", action="store_true")
    return parser


def _flags(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if "." in k}


def embedder_from(cfg: CliConfig) -> Embedder:
    if cfg["embedding.backend"] == "remote":
        spec = EmbedderSpec(
            EmbedBackend.REMOTE_HTTP,
            cfg["embedding.dimension"],
            cfg["embedding.endpoint"],
            cfg["embedding.model"],
        )
    else:
        spec = EmbedderSpec(EmbedBackend.REFERENCE_HASH, cfg["embedding.dimension"])
    return Embedder(spec)


def generation_from(cfg: CliConfig) -> GenerationConfig:
    backend = Backend(cfg["generation.backend"])
    if backend is Backend.CHAT and not cfg.api_key:
        raise MissingApiKey()
    return GenerationConfig(
        backend=backend,
        model_name=cfg["generation.model"],
        temperature=cfg["generation.temperature"],
        top_p=cfg["generation.top_p"],
        endpoint=cfg["generation.endpoint"],
        timeout_s=cfg["generation.timeout_s"],
        max_retries=cfg["generation.max_retries"],
        api_key=cfg.api_key,
    )


def _emit(text: str, out, typewriter: bool) -> None:
    if not typewriter:
        print(text, file=out)
        return
    for word in text.split():
        print(word, end=" ", file=out, flush=True)
        time.sleep(TYPEWRITER_DELAY_S)
    print(file=out)


def _print_answer(answer, out, typewriter=False) -> None:
    _emit(answer.text, out, typewriter)
    if answer.citations:
        print("Sources: " + ", ".join(answer.citations), file=out)


def cmd_ingest(cfg: CliConfig, out) -> int:
    embedder = embedder_from(cfg)
    chunk_cfg = ChunkConfig(cfg["chunk.max_tokens"], cfg["chunk.overlap"])
    clean_cfg = CleanConfig(
        lowercase=cfg["clean.lowercase"],
        strip_repeated_lines=cfg["clean.strip_repeated_lines"],
        min_repeat_pages=cfg["clean.min_repeat_pages"],
        collapse_whitespace=cfg["clean.collapse_whitespace"],
    )
    store = vector_store.get_or_create_store(
        cfg["store.root"], cfg["store.name"], embedder.dimension, embedder.embedder_id
    )
    summary = index_corpus(cfg["corpus.dir"], store, embedder, chunk_cfg, cfg["chunk.mode"], clean_cfg)
    for name, n in summary.indexed:
        print(f"indexed {name}: {n} chunks", file=out)
    for name in summary.duplicates:
        print(f"duplicate skipped: {name}", file=out)
    for failure in summary.failures:
        print(f"failed {failure}", file=out)
    print(f"{summary.documents} documents, {summary.chunks} chunks, {summary.records_added} records", file=out)
    if summary.duplicates:
        print(f"{len(summary.duplicates)} duplicates skipped", file=out)
    if summary.failures:
        print(f"{len(summary.failures)} files failed", file=out)
    print(f"store '{store.name}' ({store.manifest.store_id}) holds {store.manifest.record_count} records", file=out)
    return 1 if summary.failures else 0


def _repl(answer_fn, stdin, out, err, typewriter: bool) -> int:
    while True:
        print(PROMPT, end="", file=out, flush=True)
        line = stdin.readline()
        if not line:
            print(file=out)
            print(FAREWELL, file=out)
            return 0
        question = line.strip()
        if question.lower() == "exit":
            print(FAREWELL, file=out)
            return 0
        if not question:
            continue
        try:
            _print_answer(answer_fn(question), out, typewriter)
        except RagError as exc:
            # a failed turn must not end the session
            print(f"error: {exc.name}: {exc}", file=err)
        print(file=out)


def cmd_ask(cfg: CliConfig, args, stdin, out, err) -> int:
    gen_cfg = generation_from(cfg)
    template = DEFAULT_TEMPLATE
    if cfg["prompt.template_path"]:
        template = PromptTemplate.from_file(cfg["prompt.template_path"])
    store = vector_store.load(cfg["store.root"], cfg["store.name"])
    embedder = embedder_from(cfg)
    session = ConversationSession(store_name=store.name)

    def answer(question):
        return chat_turn(
            session, store, embedder, question, gen_cfg,
            k=cfg["retrieve.k"], min_score=cfg["retrieve.min_score"], template=template,
        )

    if args.once is not None:
        _print_answer(answer(args.once), out, args.typewriter)
        return 0
    return _repl(answer, stdin, out, err, args.typewriter)


def cmd_stores(cfg: CliConfig, args, out) -> int:
    root = cfg["store.root"]
    if args.action == "delete":
        vector_store.delete_store(root, args.name)
        print(f"deleted store '{args.name}'", file=out)
        return 0
    manifests = vector_store.list_stores(root)
    if not manifests:
        print("no stores", file=out)
    for m in manifests:
        print(
            f"{m.name}\t{m.store_id}\t{m.embedder_id}\tdimension={m.dimension}\t"
            f"records={m.record_count}\tcreated={m.created_at}",
            file=out,
        )
    return 0


def cmd_remote(cfg: CliConfig, args, stdin, out, err) -> int:
    if not cfg.api_key:
        raise MissingApiKey()
    client = AssistantClient(cfg["remote.endpoint"], cfg.api_key, cfg["remote.timeout_s"])
    store_name = cfg["remote.vector_store"] or cfg["store.name"]
    if args.action == "sync":
        vs_id = client.ensure_vector_store(store_name, cfg["remote.upload_dir"])
        profile = AssistantProfile(
            name=cfg["remote.assistant_name"],
            description=cfg["remote.description"],
            instructions=cfg["remote.instructions"],
            model_name=cfg["remote.model"],
        )
        assistant_id = client.ensure_assistant(profile, vs_id)
        for name, file_id in sorted(client.ids.file_ids.items()):
            print(f"uploaded {name}: {file_id}", file=out)
        print(f"vector store '{store_name}': {vs_id}", file=out)
        print(f"assistant '{profile.name}': {assistant_id}", file=out)
        return 0

    vs_id = client.find_vector_store(store_name)
    if not vs_id:
        raise NotFound(f"remote vector store '{store_name}' not found; run 'ragforge remote sync' first")
    assistant_id = client.find_assistant(cfg["remote.assistant_name"])
    if not assistant_id:
        raise NotFound(f"assistant '{cfg['remote.assistant_name']}' not found; run 'ragforge remote sync' first")
    thread_id = client.create_thread(vs_id)

    def answer(question):
        return client.ask_remote(
            thread_id, assistant_id, question,
            poll_interval_s=cfg["remote.poll_interval_s"], max_polls=cfg["remote.max_polls"],
        )

    if args.once is not None:
        _print_answer(answer(args.once), out, args.typewriter)
        return 0
    return _repl(answer, stdin, out, err, args.typewriter)


def run(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin or sys.stdin
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=err, format="%(message)s")
    try:
        cfg = CliConfig.resolve(_flags(args), config_path=args.config, env_file=args.env_file)
        if args.command == "ingest":
            return cmd_ingest(cfg, out)
        if args.command == "ask":
            return cmd_ask(cfg, args, stdin, out, err)
        if args.command == "stores":
            return cmd_stores(cfg, args, out)
        return cmd_remote(cfg, args, stdin, out, err)
    except RagError as exc:
        print(f"error: {exc.name}: {exc}", file=err)
        return exc.exit_code
    except KeyboardInterrupt:
        print(file=err)
        return 130


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
