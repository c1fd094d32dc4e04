"""Command-line entry points: serve the scorer, train an adapter."""
from __future__ import annotations

import logging
import sys

import click

from .model import ServiceConfig
from .prompts import RecordFormatError


@click.group()
@click.option("-v", "--verbose", is_flag=True)
def main(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--model", "model_path", default="", help="Base checkpoint dir.")
@click.option("--adapter", "adapter_path", default=None,
              help="Adapter checkpoint dir to load on top of the base model.")
@click.option("--device", default="cpu")
@click.option("--max-prompt-tokens", type=int, default=512)
@click.option("--mock", is_flag=True, help="Serve hash-based scores, no model.")
@click.option("--port", type=int, default=8100)
def serve(model_path, adapter_path, device, max_prompt_tokens, mock, port):
    """Run the HTTP scoring service."""
    from .service import serve as run_service

    try:
        config = ServiceConfig(
            model_path=model_path, adapter_path=adapter_path, device=device,
            max_prompt_tokens=max_prompt_tokens, mock=mock, port=port,
        )
    except ValueError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    run_service(config)


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True),
              help="Labeled dataset (record-per-line).")
@click.option("--base-model", required=True, help="Base checkpoint dir.")
@click.option("--output-dir", "-o", required=True)
@click.option("--rank", type=int, default=8)
@click.option("--alpha", type=float, default=16.0)
@click.option("--epochs", type=int, default=1)
@click.option("--batch-size", type=int, default=8,
              help="Lower this first if training runs out of memory.")
@click.option("--learning-rate", type=float, default=1e-3)
@click.option("--max-prompt-tokens", type=int, default=512)
@click.option("--loss-over-prompt", is_flag=True,
              help="Supervise the whole sequence, not just the label token.")
@click.option("--seed", type=int, default=42)
@click.option("--device", default="cpu")
def train(dataset, base_model, output_dir, rank, alpha, epochs, batch_size,
          learning_rate, max_prompt_tokens, loss_over_prompt, seed, device):
    """Train a low-rank adapter on a labeled dataset."""
    from .train import TrainConfig, train as run_train

    config = TrainConfig(
        dataset_path=dataset, base_model_path=base_model, output_dir=output_dir,
        rank=rank, alpha=alpha, epochs=epochs, batch_size=batch_size,
        learning_rate=learning_rate, max_prompt_tokens=max_prompt_tokens,
        loss_over_prompt=loss_over_prompt, seed=seed, device=device,
    )
    try:
        result = run_train(config)
    except RecordFormatError as exc:
        click.echo(f"dataset error: {exc}", err=True)
        sys.exit(2)
    click.echo(
        f"trained on {result.n_examples} examples: "
        f"loss {result.initial_loss:.4f} -> {result.final_loss:.4f}; "
        f"adapter saved to {result.checkpoint_dir}"
    )


if __name__ == "__main__":
    main()
