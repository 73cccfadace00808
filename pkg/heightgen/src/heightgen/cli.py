import sys

import click

from .errors import HeightgenError


@click.group()
def cli():
    """Train and serve the texture-to-heightfield model."""


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--epochs", default=60, show_default=True, type=int)
@click.option("--batch-size", default=10, show_default=True, type=int)
@click.option("--image-size", default=64, show_default=True, type=int)
@click.option("--pretrain-epochs", default=6, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
def train(manifest_path, out_dir, epochs, batch_size, image_size, pretrain_epochs, seed):
    """Train on a split corpus manifest and write a model artifact."""
    from .train import TrainingConfig, train_from_paths

    config = TrainingConfig(
        epochs=epochs,
        batch_size=batch_size,
        image_size=image_size,
        pretrain_epochs=pretrain_epochs,
        seed=seed,
    )
    result = train_from_paths(config, manifest_path, out_dir)
    click.echo(
        f"trained {result.model_version}: test mse "
        f"{result.initial_test_mse:.5f} -> {result.final_test_mse:.5f}"
    )
    click.echo(f"artifact: {result.artifact_dir}")


@cli.command()
@click.option("--artifact", "artifact_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8800, show_default=True, type=int)
def serve(artifact_dir, host, port):
    """Serve a trained artifact over the generation wire protocol."""
    import uvicorn

    from .serve import create_app

    uvicorn.run(create_app(artifact_dir), host=host, port=port, log_level="info")


def main():
    try:
        cli(standalone_mode=False)
    except HeightgenError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except click.exceptions.Abort:
        sys.exit(130)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)


if __name__ == "__main__":
    main()
