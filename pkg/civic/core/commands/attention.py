import click
import numpy as np

from .. import attention as attn
from .command_factory import emit, existing_file, handle_errors, json_option


@click.command("attention")
@click.argument("input_path", type=existing_file)
@json_option
@handle_errors
def attention(input_path, as_json):
    """
    Print the attention weights of every head for a JSON document
    {"Y": [[...]], "heads": [{"W_q": ..., "W_k": ..., "W_v": ...}]}.
    """
    Y, params = attn.load_attention_input(input_path)
    weights = attn.head_weights(Y, params)
    output = attn.multi_head(Y, params)

    blocks = []
    for index, matrix in enumerate(weights):
        blocks.append(f"Head {index}:\n{np.array2string(matrix, precision=4)}")
    blocks.append(f"Output:\n{np.array2string(output, precision=4)}")
    emit({"weights": weights, "output": output}, as_json, "\n".join(blocks))
