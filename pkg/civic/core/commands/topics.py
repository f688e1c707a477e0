from pathlib import Path

import click

from .. import topics as lda
from ..utility import write_json
from .command_factory import (
    emit,
    handle_errors,
    json_option,
    posts_options,
    relevant_documents,
    seed_option,
)


@click.command("topics")
@posts_options
@click.option("--k-min", type=int, default=2, show_default=True)
@click.option("--k-max", type=int, default=10, show_default=True)
@click.option("--alpha", type=float, default=1.0, show_default=True)
@click.option("--beta", type=float, default=lda.DEFAULT_BETA, show_default=True)
@click.option("--iterations", type=int, default=200, show_default=True)
@click.option("--top-n", type=int, default=lda.DEFAULT_TOP_N, show_default=True)
@click.option("--min-doc-freq", type=int, default=1, show_default=True)
@click.option(
    "--output-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=Path("."),
    show_default=True,
)
@seed_option
@json_option
@handle_errors
def topics(
    posts,
    keywords,
    stopwords,
    start,
    end,
    k_min,
    k_max,
    alpha,
    beta,
    iterations,
    top_n,
    min_doc_freq,
    output_dir,
    seed,
    as_json,
):
    """Fit LDA topic models over relevant posts, choosing K by UMass coherence."""
    _, kept = relevant_documents(posts, keywords, stopwords, start, end)
    corpus = lda.build_corpus([doc for _, doc in kept], min_doc_freq)
    best_k, scores = lda.select_k(
        corpus, k_min, k_max, alpha, beta, iterations, seed, top_n
    )
    model = lda.fit_lda(corpus, best_k, alpha, beta, iterations, seed)

    output_dir.mkdir(parents=True, exist_ok=True)
    write_json(lda.dump_model(model), output_dir / "topics_model.json")
    lda.top_words_frame(model, top_n).to_csv(
        output_dir / "topics_top_words.csv",
        index=False,
        float_format="%.6f",
        lineterminator="\n",
    )

    result = {
        "K": best_k,
        "coherence_by_k": {str(k): value for k, value in scores},
        "top_words": {
            str(topic): lda.top_words(model, topic, top_n) for topic in range(best_k)
        },
    }
    lines = [f"K = {best_k}"] + [
        f"  Topic {topic}: {lda.format_top_words(lda.top_words(model, topic, top_n))}"
        for topic in range(best_k)
    ]
    emit(result, as_json, "\n".join(lines))
