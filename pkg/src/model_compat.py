from typing import Any, Dict, Type, TypeVar

import pydantic
from pydantic import BaseModel

PYDANTIC_V2 = pydantic.VERSION.startswith("2.")

ModelT = TypeVar("ModelT", bound=BaseModel)


def model_fields(model_cls: Type[BaseModel]) -> Dict[str, Any]:
    return model_cls.model_fields if PYDANTIC_V2 else model_cls.__fields__


def model_dump(model: BaseModel) -> Dict[str, Any]:
    return model.model_dump() if PYDANTIC_V2 else model.dict()


def model_replace(model: ModelT, **updates) -> ModelT:
    """Copy of `model` with `updates` applied; like pydantic's own copy, updates are not re-validated."""
    if PYDANTIC_V2:
        return model.model_copy(update=updates)
    return model.copy(update=updates)
