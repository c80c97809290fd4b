from pydantic import BaseModel


class StageManifest(BaseModel):
    stage: str
    config_hash: str
    seed: int
    files: list[str] = []
    details: dict[str, str | int | float | bool | list | dict | None] = {}
